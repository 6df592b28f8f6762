"""Time-stamped dictionary, sliding views, lasso coding and class probabilities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .features import covariance_descriptor
from .skeleton import ActionSequence, LabelSet, common_joint_count
from .windowing import WindowSpec, segment, sliding_range

DEFAULT_LAMBDA = 0.1
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 1000
DEFAULT_EPS = 1e-12
KKT_TOL = 1e-6
# squared column norms below this are treated as empty atoms
_EMPTY_ATOM = 1e-24
_POLISH_EVERY = 10
_POLISH_TOL = 1e-9
_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Unit-norm atoms stored column-wise, grouped by window index ascending.

    ``class_index``, ``window_index`` (1-based) and ``example_index`` give the
    provenance of every column.
    """

    atoms: np.ndarray
    class_index: np.ndarray
    window_index: np.ndarray
    example_index: np.ndarray
    label_set: LabelSet
    W: int
    _gram: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        for name in ("atoms", "class_index", "window_index", "example_index"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        m = self.atoms.shape[1]
        if not (len(self.class_index) == len(self.window_index) == len(self.example_index) == m):
            raise ValueError("atom metadata must have one entry per column")

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    @property
    def dim(self) -> int:
        return self.atoms.shape[0]

    @property
    def gram(self) -> np.ndarray:
        # computed once; the list append is atomic so concurrent readers are safe
        if not self._gram:
            g = self.atoms.T @ self.atoms
            g.setflags(write=False)
            self._gram.append(g)
        return self._gram[0]


@dataclass(frozen=True, eq=False)
class SlidingView:
    dictionary: Dictionary
    center: int
    columns: np.ndarray

    @property
    def atoms(self) -> np.ndarray:
        return self.dictionary.atoms[:, self.columns]

    @property
    def gram(self) -> np.ndarray:
        return self.dictionary.gram[np.ix_(self.columns, self.columns)]

    @property
    def class_index(self) -> np.ndarray:
        return self.dictionary.class_index[self.columns]


@dataclass(frozen=True)
class SparseCode:
    alpha: np.ndarray
    lam: float
    objective: float
    n_sweeps: int


def sequence_descriptors(seq: ActionSequence, W: int) -> np.ndarray:
    """``(W, d)`` array of window descriptors for one sequence."""
    return np.stack(
        [covariance_descriptor(seq.frames[win.as_slice()]) for win in segment(seq.n_frames, W)]
    )


def build_dictionary(train: Sequence[ActionSequence], spec: WindowSpec) -> Dictionary:
    """Segment every training sequence into ``spec.W`` windows and stack their
    descriptors as atoms, window-major, then class, then example order."""
    if not train:
        raise ValueError("cannot build a dictionary from an empty training set")
    common_joint_count(train)
    labels = LabelSet.from_sequences(train)
    by_class: list[list[ActionSequence]] = [[] for _ in labels.classes]
    for s in train:
        by_class[labels.index(s.label)].append(s)
    descs = [[sequence_descriptors(s, spec.W) for s in group] for group in by_class]

    cols, cls, win, ex = [], [], [], []
    for w in range(spec.W):
        for c, group in enumerate(descs):
            for i, d in enumerate(group):
                cols.append(d[w])
                cls.append(c)
                win.append(w + 1)
                ex.append(i)
    return Dictionary(
        atoms=np.stack(cols, axis=1),
        class_index=np.asarray(cls, dtype=np.int64),
        window_index=np.asarray(win, dtype=np.int64),
        example_index=np.asarray(ex, dtype=np.int64),
        label_set=labels,
        W=spec.W,
    )


def sliding_view(dictionary: Dictionary, w: int, N: int) -> SlidingView:
    allowed = sliding_range(w, N, dictionary.W)
    mask = (dictionary.window_index >= allowed.start) & (dictionary.window_index < allowed.stop)
    return SlidingView(dictionary, w, np.flatnonzero(mask))


def soft_threshold(x, kappa):
    return np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)


def lasso_objective(D: np.ndarray, f: np.ndarray, alpha: np.ndarray, lam: float) -> float:
    r = f - D @ alpha
    return float(r @ r + lam * np.abs(alpha).sum())


def kkt_violation(D: np.ndarray, f: np.ndarray, alpha: np.ndarray, lam: float) -> float:
    """Largest breach of the lasso optimality conditions at ``alpha``.

    For the objective ``||f - D a||^2 + lam * ||a||_1`` the correlation
    ``g = 2 D^T (f - D a)`` must equal ``lam * sign(a_j)`` on the support and
    stay within ``[-lam, lam]`` off it.
    """
    g = 2.0 * D.T @ (f - D @ alpha)
    on = alpha != 0
    viol = np.where(on, np.abs(g - lam * np.sign(alpha)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max(initial=0.0))


@numba.njit(cache=True)
def _cd_sweeps(G, corr, alpha, diag, live, half, n_sweeps, tol):
    """Run up to ``n_sweeps`` cyclic sweeps in place; returns (sweeps, converged)."""
    for sweep in range(n_sweeps):
        max_change = 0.0
        for j in range(alpha.shape[0]):
            if not live[j]:
                continue
            old = alpha[j]
            rho = corr[j] + diag[j] * old
            if rho > half:
                new = (rho - half) / diag[j]
            elif rho < -half:
                new = (rho + half) / diag[j]
            else:
                new = 0.0
            if new != old:
                delta = new - old
                for i in range(corr.shape[0]):
                    corr[i] -= G[i, j] * delta
                alpha[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            return sweep + 1, True
    return n_sweeps, False


def _polish(G: np.ndarray, b: np.ndarray, alpha: np.ndarray, lam: float) -> tuple[np.ndarray, bool]:
    """Active-set refinement of a coordinate-descent iterate.

    On a fixed support ``S`` with signs ``s`` the objective is a quadratic
    minimised by ``G_SS x = b_S - lam / 2 * s``. The iterate moves toward
    ``x`` and stops at the first coordinate that reaches zero, which is
    dropped before solving again. A rank-deficient support is first shrunk
    along a null direction of its atoms, which leaves the fit unchanged and
    does not grow the l1 term. Returns the refined point and whether it
    passes the optimality check.
    """
    alpha = alpha.copy()
    while True:
        support = np.flatnonzero(alpha)
        if not len(support):
            break
        signs = np.sign(alpha[support])
        cur = alpha[support]
        G_SS = G[np.ix_(support, support)]
        evals, evecs = np.linalg.eigh(G_SS)
        if evals[0] <= _RANK_TOL * max(evals[-1], 1.0):
            v = evecs[:, 0]
            if signs @ v > 0:
                v = -v
            hit = np.flatnonzero(v * cur < 0)
            steps = -cur[hit] / v[hit]
            k = np.argmin(steps)
            alpha[support] = cur + steps[k] * v
            alpha[support[hit[k]]] = 0.0
            continue
        x = np.linalg.solve(G_SS, b[support] - lam / 2.0 * signs)
        flips = np.flatnonzero(np.sign(x) != signs)
        if not len(flips):
            alpha[support] = x
            break
        steps = cur[flips] / (cur[flips] - x[flips])
        k = np.argmin(steps)
        alpha[support] = cur + steps[k] * (x - cur)
        alpha[support[flips[k]]] = 0.0
    return alpha, _certified(G, b, alpha, lam, _POLISH_TOL)


def _reduced_objective(G, b, alpha, lam) -> float:
    # objective minus the constant ||f||^2
    return float(alpha @ G @ alpha - 2.0 * b @ alpha + lam * np.abs(alpha).sum())


def _certified(G, b, alpha, lam, tol) -> bool:
    g = 2.0 * (b - G @ alpha)
    on = alpha != 0
    if np.any(np.abs(g[~on]) > lam + tol):
        return False
    return not np.any(np.abs(g[on] - lam * np.sign(alpha[on])) > tol)


def lasso_cd(
    D: np.ndarray,
    f: np.ndarray,
    lam: float,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    gram: np.ndarray | None = None,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, int]:
    """Cyclic coordinate descent for ``min ||f - D a||^2 + lam * ||a||_1``.

    Starts from zero and sweeps the coordinates in order, stopping once the
    largest coordinate change in a sweep drops below ``tol`` (and the KKT
    check holds at ``KKT_TOL``). Every few sweeps the iterate is refined on
    its current support by ``_polish``; the run ends as soon as that refined
    point certifies optimality. ``callback`` gets
    ``(sweep, alpha)`` after every sweep and forces one sweep per chunk.
    """
    G = np.ascontiguousarray(D.T @ D if gram is None else gram, dtype=np.float64)
    b = np.ascontiguousarray(D.T @ f, dtype=np.float64)
    alpha = np.zeros(G.shape[0])
    diag = np.diag(G).copy()
    live = diag > _EMPTY_ATOM
    chunk = 1 if callback is not None else _POLISH_EVERY
    done = 0
    while done < max_iter:
        corr = b - G @ alpha
        n, converged = _cd_sweeps(G, corr, alpha, diag, live, lam / 2.0,
                                  min(chunk, max_iter - done), tol)
        done += n
        polished, certified = _polish(G, b, alpha, lam)
        # a rank-deficient support can send the polish uphill; keep the better point
        if _reduced_objective(G, b, polished, lam) <= _reduced_objective(G, b, alpha, lam):
            alpha = polished
        else:
            certified = False
        if callback is not None:
            callback(done, alpha)
        if certified or (converged and _certified(G, b, alpha, lam, KKT_TOL)):
            break
    return alpha, done


def solve_lasso(
    f: np.ndarray,
    view: SlidingView,
    lam: float = DEFAULT_LAMBDA,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> SparseCode:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    f = np.asarray(f, dtype=np.float64)
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite query descriptor")
    D = view.atoms
    if D.shape[0] != f.shape[0]:
        raise ValueError(f"descriptor has dimension {f.shape[0]}, dictionary {D.shape[0]}")
    alpha, sweeps = lasso_cd(D, f, lam, max_iter, tol, gram=view.gram)
    return SparseCode(alpha, lam, lasso_objective(D, f, alpha, lam), sweeps)


def class_reconstruction_error(f: np.ndarray, view: SlidingView, code: SparseCode) -> np.ndarray:
    """Squared residual of ``f`` when rebuilt from each class's atoms alone."""
    if len(code.alpha) != len(view.columns):
        raise ValueError("sparse code is not aligned with the sliding view")
    D = view.atoms
    owner = view.class_index
    errors = np.empty(view.dictionary.label_set.n_classes)
    for c in range(len(errors)):
        sel = owner == c
        r = D[:, sel] @ code.alpha[sel] - f
        errors[c] = r @ r
    return errors


def inverse_probabilities(values: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Normalised reciprocals: smaller error or distance means higher probability."""
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("errors must be finite and non-negative")
    inv = 1.0 / np.maximum(values, eps)
    return inv / inv.sum()


def dict_probabilities(errors: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    return inverse_probabilities(errors, eps)
