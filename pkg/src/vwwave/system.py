"""First-order reduction of the wave equation and its lifted systems.

Indices are 0-based throughout.  For ``n`` space dimensions the level-0
state is ``U = (d_1 u, ..., d_n u, d_t u)`` of size ``n + 1``; level 1 is
``V = (d_1 U, ..., d_n U)`` and level 2 is ``W = (d_1 V, ..., d_n V)``.

Matrix entries are stored symbolically as ``coef * d^alpha a_q`` so that
derivatives of matrices are exact and the symmetriser identity is checked
without rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, UnsupportedLevelError, VerificationError

MAX_LEVEL = 2


@dataclass(frozen=True)
class Symbol:
    """``coef * d^deriv a_q``; ``q = None`` is the constant ``coef``."""

    coef: float = 1.0
    q: Optional[int] = None
    deriv: tuple = ()

    def diff(self, i: int) -> Optional["Symbol"]:
        if self.q is None:
            return None
        return Symbol(self.coef, self.q, tuple(sorted(self.deriv + (i,))))


@dataclass(frozen=True)
class Entry:
    row: int
    col: int
    sym: Symbol


@dataclass
class CoefficientData:
    """Samples of ``a_q``, ``d_i a_q`` and ``d_i d_p a_q`` on one grid."""

    a: list
    da: Optional[list] = None
    d2a: Optional[list] = None

    def __post_init__(self):
        self.a = [np.asarray(v) for v in self.a]
        shape = self.a[0].shape
        if any(v.shape != shape for v in self.a):
            raise ConfigurationError("coefficient samples must share one grid")
        n = len(self.a)
        if self.da is not None:
            self.da = [np.asarray(v) for v in self.da]
            if any(v.shape != (n,) + shape for v in self.da):
                raise ConfigurationError("gradient samples must have shape (n, *grid)")
        if self.d2a is not None:
            self.d2a = [np.asarray(v) for v in self.d2a]
            if any(v.shape != (n, n) + shape for v in self.d2a):
                raise ConfigurationError("Hessian samples must have shape (n, n, *grid)")

    @property
    def shape(self):
        return self.a[0].shape

    def value(self, sym: Symbol):
        if sym.q is None:
            return sym.coef
        order = len(sym.deriv)
        if order == 0:
            v = self.a[sym.q]
        elif order == 1:
            if self.da is None:
                raise ConfigurationError("first derivatives of the coefficients are required")
            v = self.da[sym.q][sym.deriv[0]]
        elif order == 2:
            if self.d2a is None:
                raise ConfigurationError("second derivatives of the coefficients are required")
            v = self.d2a[sym.q][sym.deriv[0], sym.deriv[1]]
        else:
            raise UnsupportedLevelError("coefficient derivatives beyond order 2 are not stored")
        return v if sym.coef == 1.0 else sym.coef * v

    @classmethod
    def from_entries(cls, entries):
        """From one net entry per coefficient ``a_1, ..., a_n``."""
        return cls([e.a for e in entries], [e.grad for e in entries], [e.hess for e in entries])


@dataclass(frozen=True)
class StructuredMatrix:
    """Sparse ``size x size`` matrix field given by symbolic entries."""

    size: int
    entries: tuple

    def nonzero(self):
        return sorted({(e.row, e.col) for e in self.entries})

    def diff(self, i: int) -> "StructuredMatrix":
        out = []
        for e in self.entries:
            s = e.sym.diff(i)
            if s is not None:
                out.append(Entry(e.row, e.col, s))
        return StructuredMatrix(self.size, tuple(out))

    def transpose(self) -> "StructuredMatrix":
        return StructuredMatrix(self.size, tuple(Entry(e.col, e.row, e.sym) for e in self.entries))

    def __add__(self, other: "StructuredMatrix") -> "StructuredMatrix":
        if other.size != self.size:
            raise ConfigurationError("matrix sizes differ")
        return StructuredMatrix(self.size, self.entries + other.entries)

    def shifted(self, offset: int, size: int) -> "StructuredMatrix":
        return StructuredMatrix(
            size, tuple(Entry(e.row + offset, e.col + offset, e.sym) for e in self.entries)
        )

    def block(self, bi: int, bj: int, block: int, size: int) -> "StructuredMatrix":
        """Place this matrix as block ``(bi, bj)`` of a larger matrix."""
        return StructuredMatrix(
            size,
            tuple(Entry(e.row + bi * block, e.col + bj * block, e.sym) for e in self.entries),
        )

    def apply(self, data: CoefficientData, V):
        """``M(x) V(x)`` pointwise; ``V`` has shape ``(size, *grid)``."""
        out = np.zeros(np.broadcast_shapes(V.shape, (self.size,) + data.shape),
                       dtype=np.result_type(V, float))
        for e in self.entries:
            out[e.row] += data.value(e.sym) * V[e.col]
        return out

    def evaluate(self, data: CoefficientData) -> dict:
        """Entry values summed per position: ``{(row, col): samples}``."""
        out = {}
        for e in self.entries:
            v = data.value(e.sym)
            key = (e.row, e.col)
            out[key] = out[key] + v if key in out else v
        return out

    def dense(self, data: CoefficientData):
        """Dense ``(size, size, *grid)`` array; test oracle only."""
        out = np.zeros((self.size, self.size) + data.shape)
        for e in self.entries:
            out[e.row, e.col] += data.value(e.sym)
        return out


def _diag_times(q: tuple, m: StructuredMatrix) -> StructuredMatrix:
    """Symbolic product ``diag(q) M`` where every entry of M is linear in one a_q."""
    out = []
    for e in m.entries:
        d = q[e.row]
        if d.q is None:
            out.append(Entry(e.row, e.col, Symbol(d.coef * e.sym.coef, e.sym.q, e.sym.deriv)))
        elif e.sym.q is None:
            out.append(Entry(e.row, e.col, Symbol(d.coef * e.sym.coef, d.q, d.deriv)))
        else:
            raise VerificationError("products of two coefficient symbols are not represented")
    return StructuredMatrix(m.size, tuple(out))


@dataclass(frozen=True)
class HyperbolicSystem:
    """``d_t X = sum_k A_k d_k X + B X + F`` at lift ``level``."""

    level: int
    n: int
    A: tuple
    B: Optional[StructuredMatrix]
    Q: tuple
    data: CoefficientData = field(repr=False)
    parent: Optional["HyperbolicSystem"] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return (self.n + 1) * self.n**self.level

    @property
    def block(self) -> int:
        return self.n + 1

    def Q_values(self):
        return [self.data.value(s) for s in self.Q]

    def QA(self, k: int) -> StructuredMatrix:
        return _diag_times(self.Q, self.A[k])

    def QB(self) -> StructuredMatrix:
        return _diag_times(self.Q, self.B)

    def Q_dense(self):
        out = np.zeros((self.size, self.size) + self.data.shape)
        for r, s in enumerate(self.Q):
            out[r, r] = self.data.value(s)
        return out

    def apply_Q(self, X):
        return np.stack([np.broadcast_to(self.data.value(s), X.shape[1:]) * X[r]
                         for r, s in enumerate(self.Q)])

    def rhs(self, X, dX, forcing=None):
        """``sum_k A_k dX[k] + B X + F``; ``dX[k]`` is ``d_k X``."""
        out = sum(self.A[k].apply(self.data, dX[k]) for k in range(self.n))
        if self.B is not None:
            out = out + self.B.apply(self.data, X)
        if forcing is not None:
            out = out + forcing
        return out

    def forcing(self, f_derivatives: dict, lower_state=None):
        """Forcing at this level.

        ``f_derivatives`` maps sorted direction tuples to samples of the
        corresponding derivative of f, e.g. ``{(): f, (0,): d_1 f}``.
        At level 2 ``lower_state`` is the level-1 state V entering the
        coupling ``(d_i B~) V``.
        """
        shape = self.data.shape
        blocks = []
        for idx in np.ndindex(*((self.n,) * self.level)):
            key = tuple(sorted(idx))
            vec = np.zeros((self.block,) + shape, dtype=np.result_type(f_derivatives[key], float))
            vec[self.n] = f_derivatives[key]
            blocks.append(vec)
        F = np.concatenate(blocks) if blocks else np.zeros((self.block,) + shape)
        if self.level == 2:
            if lower_state is None:
                raise ConfigurationError("level-2 forcing needs the level-1 state")
            Bp = self.parent.B
            m = self.parent.size
            F = F.astype(np.result_type(F, lower_state))
            for i in range(self.n):
                F[i * m:(i + 1) * m] += Bp.diff(i).apply(self.data, lower_state)
        return F

    def to_dict(self):
        return {
            "level": self.level,
            "n": self.n,
            "size": self.size,
            "A": [[(e.row, e.col, e.sym.coef, e.sym.q, list(e.sym.deriv)) for e in a.entries]
                  for a in self.A],
            "B": None if self.B is None
            else [(e.row, e.col, e.sym.coef, e.sym.q, list(e.sym.deriv)) for e in self.B.entries],
        }


def build_system(n: int, a, da=None, d2a=None) -> HyperbolicSystem:
    """Level-0 system: ``A_k`` has 1 at ``(k, n)`` and ``a_k`` at ``(n, k)``."""
    if n < 1:
        raise ConfigurationError("dimension must be at least 1")
    data = a if isinstance(a, CoefficientData) else CoefficientData(list(a), da, d2a)
    if len(data.a) != n:
        raise ConfigurationError(f"expected {n} coefficients, got {len(data.a)}")
    size = n + 1
    A = tuple(
        StructuredMatrix(size, (Entry(k, n, Symbol(1.0)), Entry(n, k, Symbol(1.0, k))))
        for k in range(n)
    )
    Q = tuple(Symbol(1.0, k) for k in range(n)) + (Symbol(1.0),)
    return HyperbolicSystem(0, n, A, None, Q, data)


def derive_system(sys: HyperbolicSystem) -> HyperbolicSystem:
    """Differentiate in every ``x_i`` and stack: level ``l`` to ``l + 1``."""
    if sys.level >= MAX_LEVEL:
        raise UnsupportedLevelError(f"lifting beyond level {MAX_LEVEL} is not implemented")
    n, m = sys.n, sys.size
    size = n * m
    A = tuple(
        StructuredMatrix(size, sum((sys.A[k].shifted(i * m, size).entries for i in range(n)), ()))
        for k in range(n)
    )
    entries = []
    for i in range(n):
        for k in range(n):
            entries.extend(sys.A[k].diff(i).block(i, k, m, size).entries)
        if sys.B is not None:
            entries.extend(sys.B.block(i, i, m, size).entries)
    B = StructuredMatrix(size, tuple(entries))
    Q = sys.Q * n
    return HyperbolicSystem(sys.level + 1, n, A, B, Q, sys.data, sys)


def lift(sys: HyperbolicSystem, level: int) -> HyperbolicSystem:
    while sys.level < level:
        sys = derive_system(sys)
    return sys


# ---------------------------------------------------------------------------
# verification


def verify_symmetriser(sys: HyperbolicSystem) -> float:
    """``max_k max_x |Q A_k - A_k^T Q|`` entrywise; exactly 0 for a correct build."""
    worst = 0.0
    q = sys.Q_values()
    for k in range(sys.n):
        QA, AtQ = {}, {}
        for e in sys.A[k].entries:
            v = sys.data.value(e.sym)
            # (Q A)_{rc} = Q_r A_{rc};  (A^T Q)_{cr} = A_{rc} Q_r, multiplied in that order
            QA[(e.row, e.col)] = QA.get((e.row, e.col), 0.0) + q[e.row] * v
            AtQ[(e.col, e.row)] = AtQ.get((e.col, e.row), 0.0) + v * q[e.row]
        for key in set(QA) | set(AtQ):
            diff = np.asarray(QA.get(key, 0.0)) - np.asarray(AtQ.get(key, 0.0))
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def random_coefficients(n: int, points: int, rng, nonnegative=True, modes=3):
    """Random band-limited periodic fields on ``[0, 2 pi)^n`` with exact spectral derivatives.

    Returns ``(CoefficientData, grid_axis)``.
    """
    x = 2 * np.pi * np.arange(points) / points
    X = np.meshgrid(*([x] * n), indexing="ij")
    a, da, d2a = [], [], []
    for _ in range(n):
        val = np.zeros_like(X[0])
        grad = np.zeros((n,) + X[0].shape)
        hess = np.zeros((n, n) + X[0].shape)
        for _ in range(modes):
            kv = rng.integers(-modes, modes + 1, size=n)
            amp, phase = rng.normal(), rng.uniform(0, 2 * np.pi)
            arg = sum(kv[i] * X[i] for i in range(n)) + phase
            val += amp * np.cos(arg)
            for i in range(n):
                grad[i] += -amp * kv[i] * np.sin(arg)
                for p in range(n):
                    hess[i, p] += -amp * kv[i] * kv[p] * np.cos(arg)
        if nonnegative:
            # a = g^2 + c keeps everything band-limited and non-negative
            c = rng.uniform(0.0, 1.0)
            hess = 2 * (grad[:, None] * grad[None, :] + val * hess)
            grad = 2 * val * grad
            val = val**2 + c
        a.append(val)
        da.append(grad)
        d2a.append(hess)
    return CoefficientData(a, da, d2a), x


def spectral_derivative(f, axis: int, length=2 * np.pi):
    n = f.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=length / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis))


def _pair(X, Y, cell):
    return float(np.real(np.sum(X * np.conj(Y)))) * cell


def _rel(x, y):
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


@dataclass
class IdentityReport:
    level: int
    n: int
    trials: int
    seed: int
    points: int
    results: dict = field(default_factory=dict)

    def record(self, name, err, where):
        r = self.results.setdefault(name, {"max_rel_error": 0.0, "worst": None})
        if err >= r["max_rel_error"]:
            r["max_rel_error"] = float(err)
            r["worst"] = where

    @property
    def max_error(self) -> float:
        return max((r["max_rel_error"] for r in self.results.values()), default=0.0)

    def passed(self, tol=1e-10) -> bool:
        return self.max_error <= tol

    def to_dict(self):
        return {"level": self.level, "n": self.n, "trials": self.trials, "seed": self.seed,
                "points": self.points, "identities": self.results}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def default_points(n: int) -> int:
    return 64 if n <= 2 else 16


def verify_energy_identities(sys_or_n, trials: int = 100, seed: int = 0, points=None,
                             level: int = 1, constant=False, tol=None) -> IdentityReport:
    """Check the energy-term identities on random band-limited coefficients and states.

    Three quantities are compared per trial: the structured (symbolic)
    computation, a dense per-point matrix assembly whose x-derivative is
    taken spectrally, and, at level 1, the closed-form right-hand sides.
    """
    if isinstance(sys_or_n, HyperbolicSystem):
        n, level = sys_or_n.n, sys_or_n.level
    else:
        n = int(sys_or_n)
    if level < 1:
        raise ConfigurationError("energy identities are stated for level >= 1")
    points = points or default_points(n)
    rng = np.random.default_rng(seed)
    report = IdentityReport(level, n, trials, seed, points)
    cell = (2 * np.pi / points) ** n
    for t in range(trials):
        data, _ = random_coefficients(n, points, rng)
        if constant:
            data = CoefficientData([np.full_like(v, v.flat[0]) for v in data.a],
                                   [np.zeros_like(v) for v in data.da],
                                   [np.zeros_like(v) for v in data.d2a])
        sys = lift(build_system(n, data), level)
        V = rng.normal(size=(sys.size,) + data.shape)
        # principal term, per k
        for k in range(n):
            structured = _pair(sys.QA(k).diff(k).apply(data, V), V, cell)
            dense_QA = np.einsum("ij...,jk...->ik...", sys.Q_dense(), sys.A[k].dense(data))
            d_dense = spectral_derivative(dense_QA, 2 + k)
            dense = _pair(np.einsum("ij...,j...->i...", d_dense, V), V, cell)
            report.record("principal_structured_vs_dense", _rel(structured, dense), [t, k])
            if level == 1:
                closed = 2 * sum(_pair(data.da[k][k] * V[k + j * (n + 1)], V[(j + 1) * (n + 1) - 1], cell)
                                 for j in range(n))
                report.record("principal_closed_form", _rel(closed, dense), [t, k])
        # lower-order term
        QB = sys.QB()
        structured = _pair(QB.apply(data, V) + QB.transpose().apply(data, V), V, cell)
        dQB = np.einsum("ij...,jk...->ik...", sys.Q_dense(), sys.B.dense(data))
        sym = dQB + np.swapaxes(dQB, 0, 1)
        dense = _pair(np.einsum("ij...,j...->i...", sym, V), V, cell)
        report.record("lower_order_structured_vs_dense", _rel(structured, dense), [t])
        if level == 1:
            closed = 2 * sum(
                _pair(data.da[j][k] * V[j + j * (n + 1)], V[(k + 1) * (n + 1) - 1], cell)
                for k in range(n) for j in range(n)
            )
            report.record("lower_order_closed_form", _rel(closed, dense), [t])
    if tol is not None and not report.passed(tol):
        worst = max(report.results.items(), key=lambda kv: kv[1]["max_rel_error"])
        raise VerificationError(
            f"identity {worst[0]} off by {worst[1]['max_rel_error']:.3g} at (trial, k) {worst[1]['worst']}"
        )
    return report


def q_lower_bound_check(sys: HyperbolicSystem, vectors: int = 100, seed: int = 0) -> float:
    """Smallest ``<Q v, v> - |v_last|^2`` over random vectors and grid points (should be >= 0)."""
    rng = np.random.default_rng(seed)
    q = np.stack([np.broadcast_to(v, sys.data.shape) for v in sys.Q_values()])
    worst = np.inf
    for _ in range(vectors):
        v = rng.normal(size=q.shape)
        form = np.sum(q * v * v, axis=0)
        last = sum(v[(j + 1) * sys.block - 1] ** 2 for j in range(sys.size // sys.block))
        worst = min(worst, float(np.min(form - last)))
    return worst


def cancellation_residual(data: CoefficientData, V, cell=1.0) -> float:
    """``-sum_k (d_k(Q~A~_k) V, V) + ((Q~B~ + B~^T Q~) V, V)`` for n = 1 (vanishes identically)."""
    sys = derive_system(build_system(1, data))
    principal = _pair(sys.QA(0).diff(0).apply(data, V), V, cell)
    QB = sys.QB()
    lower = _pair(QB.apply(data, V) + QB.transpose().apply(data, V), V, cell)
    return lower - principal


def dense_apply_residual(sys: HyperbolicSystem, seed: int = 0) -> float:
    """Max difference between structured and dense application of every matrix."""
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(sys.size,) + sys.data.shape)
    mats = list(sys.A) + ([sys.B] if sys.B is not None else [])
    worst = 0.0
    for m in mats:
        s = m.apply(sys.data, V)
        d = np.einsum("ij...,j...->i...", m.dense(sys.data), V)
        worst = max(worst, float(np.max(np.abs(s - d))))
    return worst


def gradient_stack(X, derivative):
    """Next-level state ``(d_1 X, ..., d_n X)`` given a derivative operator ``derivative(X, i)``."""
    n = X.ndim - 1
    return np.concatenate([derivative(X, i) for i in range(n)])
