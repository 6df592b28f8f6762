"""Skeleton action recognition with a sliding sparse-coding dictionary."""

__version__ = "0.1.0"
