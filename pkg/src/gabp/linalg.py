"""Sparse symmetric systems, Matrix Market I/O and matrix diagnostics.

The storage types here are deliberately simple: a symmetric system keeps its
diagonal densely and its off-diagonal nonzeros in an unordered-pair map, so
one stored value serves both orientations of an edge.  Everything downstream
(graph construction, solvers, generators) is built on these two containers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input (header, counts, duplicates, symmetry)."""


class SingularMatrixError(ValueError):
    """Pivot collapsed to working precision during elimination."""


class ZeroDiagonalError(ValueError):
    """An operation that scales by the diagonal met a zero entry."""


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class SymSystem:
    """Square symmetric system A x = b with sparse off-diagonal storage.

    ``offdiag`` maps unordered index pairs (i, j), i < j, to the shared
    value A_ij = A_ji; entries equal to exactly 0.0 are never stored,
    so the key set is also the edge set of the induced graph.
    """

    diag: np.ndarray
    offdiag: dict[tuple[int, int], float]
    rhs: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "rhs", rhs)
        if diag.ndim != 1 or diag.size < 1:
            raise ValueError("diag must be a non-empty vector")
        if rhs.shape != diag.shape:
            raise ValueError("rhs length must equal matrix dimension")
        n = diag.size
        for (i, j), v in self.offdiag.items():
            if not (0 <= i < j < n):
                raise ValueError(f"bad off-diagonal key ({i}, {j}) for n={n}")
            if v == 0.0:
                raise ValueError(f"explicit zero stored at ({i}, {j})")
        diag.setflags(write=False)
        rhs.setflags(write=False)

    @property
    def n(self) -> int:
        return self.diag.size

    @classmethod
    def from_dense(cls, a, b) -> "SymSystem":
        """Build from a dense symmetric matrix; asymmetry is rejected."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        n = a.shape[0]
        off: dict[tuple[int, int], float] = {}
        for i in range(n):
            for j in range(i + 1, n):
                if a[i, j] != a[j, i]:
                    raise ValueError(f"matrix not symmetric at ({i}, {j})")
                if a[i, j] != 0.0:
                    off[(i, j)] = float(a[i, j])
        return cls(diag=a.diagonal().copy(), offdiag=off, rhs=b)

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.diag(self.diag)
        for (i, j), v in self.offdiag.items():
            a[i, j] = v
            a[j, i] = v
        return a, self.rhs.copy()

    def with_rhs(self, b) -> "SymSystem":
        return SymSystem(diag=self.diag.copy(), offdiag=dict(self.offdiag), rhs=b)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"vector length {x.size} != dimension {self.n}")
        y = self.diag * x
        for (i, j), v in self.offdiag.items():
            y[i] += v * x[j]
            y[j] += v * x[i]
        return y


@dataclass(frozen=True)
class RectMatrix:
    """General (possibly rectangular) m x n sparse matrix as an entry map."""

    m: int
    n: int
    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("matrix dimensions must be >= 1")
        for (i, j) in self.entries:
            if not (0 <= i < self.m and 0 <= j < self.n):
                raise ValueError(f"entry ({i}, {j}) outside {self.m}x{self.n}")

    @classmethod
    def from_dense(cls, a) -> "RectMatrix":
        a = np.asarray(a, dtype=float)
        entries = {
            (i, j): float(a[i, j])
            for i in range(a.shape[0])
            for j in range(a.shape[1])
            if a[i, j] != 0.0
        }
        return cls(m=a.shape[0], n=a.shape[1], entries=entries)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.m, self.n))
        for (i, j), v in self.entries.items():
            a[i, j] = v
        return a

    @property
    def nnz(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SpectralReport:
    """Convergence diagnostics: rho(|I - D^-1 A|), dominance class, kappa."""

    rho: float
    dominance: str
    kappa: float


# ---------------------------------------------------------------------------
# Matrix Market text format
# ---------------------------------------------------------------------------

def parse_matrix_market(text: str) -> RectMatrix:
    """Parse a Matrix Market string (coordinate or array, real).

    Symmetric coordinate files are expanded to both orientations.  Entry
    order in the file never affects the result; a repeated (i, j) position
    is an error rather than an accumulation.
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise MatrixMarketError("missing %%MatrixMarket header")
    header = lines[0].split()
    if len(header) != 5 or header[1].lower() != "matrix":
        raise MatrixMarketError(f"malformed header: {lines[0]!r}")
    layout, dtype, sym = (w.lower() for w in header[2:5])
    if layout not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported layout {layout!r}")
    if dtype != "real":
        raise MatrixMarketError(f"unsupported field type {dtype!r}")
    if sym not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {sym!r}")

    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line")
    size = body[0].split()

    if layout == "coordinate":
        if len(size) != 3:
            raise MatrixMarketError(f"bad coordinate size line: {body[0]!r}")
        m, n, nnz = (int(w) for w in size)
        if len(body) - 1 != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {len(body) - 1}")
        entries: dict[tuple[int, int], float] = {}
        for ln in body[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise MatrixMarketError(f"bad entry line: {ln!r}")
            i, j, v = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
            if not (0 <= i < m and 0 <= j < n):
                raise MatrixMarketError(f"entry ({i + 1}, {j + 1}) outside {m}x{n}")
            keys = [(i, j)] if (sym == "general" or i == j) else [(i, j), (j, i)]
            for key in keys:
                if key in entries:
                    raise MatrixMarketError(
                        f"duplicate entry for position ({key[0] + 1}, {key[1] + 1})"
                    )
                entries[key] = v
        entries = {k: v for k, v in entries.items() if v != 0.0}
        return RectMatrix(m=m, n=n, entries=entries)

    if len(size) != 2:
        raise MatrixMarketError(f"bad array size line: {body[0]!r}")
    m, n = (int(w) for w in size)
    if sym == "symmetric" and m != n:
        raise MatrixMarketError("symmetric array file must be square")
    values = [float(ln) for ln in body[1:]]
    expected = m * n if sym == "general" else m * (m + 1) // 2
    if len(values) != expected:
        raise MatrixMarketError(f"expected {expected} array values, found {len(values)}")
    entries = {}
    k = 0
    # array format is column-major; symmetric files store the lower triangle
    for j in range(n):
        start = j if sym == "symmetric" else 0
        for i in range(start, m):
            v = values[k]
            k += 1
            if v != 0.0:
                entries[(i, j)] = v
                if sym == "symmetric" and i != j:
                    entries[(j, i)] = v
    return RectMatrix(m=m, n=n, entries=entries)


def system_from_matrix_market(text: str, rhs) -> SymSystem:
    """Parse a Matrix Market string into the coefficients of a SymSystem.

    A ``general`` file is accepted only if its entries are exactly
    symmetric; a ``symmetric`` header is trusted after expansion.
    """
    rect = parse_matrix_market(text)
    if rect.m != rect.n:
        raise MatrixMarketError(f"matrix is {rect.m}x{rect.n}, not square")
    n = rect.m
    diag = np.zeros(n)
    off: dict[tuple[int, int], float] = {}
    for (i, j), v in rect.entries.items():
        if i == j:
            diag[i] = v
        else:
            mirrored = rect.entries.get((j, i))
            if mirrored is None or mirrored != v:
                raise MatrixMarketError(f"asymmetric entries at ({i + 1}, {j + 1})")
            off[_pair(i, j)] = v
    return SymSystem(diag=diag, offdiag=off, rhs=rhs)


def write_matrix_market(mat: SymSystem | RectMatrix) -> str:
    """Render to Matrix Market coordinate text, losslessly for binary64."""
    if isinstance(mat, SymSystem):
        entries = [(i, i, float(v)) for i, v in enumerate(mat.diag) if v != 0.0]
        entries += [(j, i, v) for (i, j), v in sorted(mat.offdiag.items())]
        entries.sort()
        out = ["%%MatrixMarket matrix coordinate real symmetric"]
        out.append(f"{mat.n} {mat.n} {len(entries)}")
    else:
        entries = sorted((i, j, v) for (i, j), v in mat.entries.items())
        out = ["%%MatrixMarket matrix coordinate real general"]
        out.append(f"{mat.m} {mat.n} {len(entries)}")
    out += [f"{i + 1} {j + 1} {v!r}" for i, j, v in entries]
    return "\n".join(out) + "\n"


def parse_vector(text: str) -> np.ndarray:
    """Parse a headerless vector file, one decimal per line."""
    values = [float(ln) for ln in text.splitlines() if ln.strip()]
    if not values:
        raise MatrixMarketError("empty vector file")
    return np.array(values)


def write_vector(x) -> str:
    return "\n".join(f"{float(v)!r}" for v in np.asarray(x, dtype=float)) + "\n"


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def residual_norm_per_eq(system: SymSystem, x) -> float:
    """Frobenius norm of the residual A x - b divided by the equation count."""
    r = system.matvec(x) - system.rhs
    return float(np.sqrt(np.sum(r * r)) / system.n)


def _power_iteration(matvec, n: int, tol: float = 1e-6, max_iter: int = 10_000):
    """Dominant eigenvalue estimate from the deterministic all-ones start.

    Stops on the eigenpair residual ||M x - lam x|| <= tol * max(1, |lam|),
    which tracks the actual eigenvalue error even when successive Rayleigh
    estimates stagnate slowly.  The caller chooses an operator whose
    dominant eigenvalue is simple and positive.
    """
    x = np.ones(n) / math.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        y = matvec(x)
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        lam = float(x @ y)
        if float(np.linalg.norm(y - lam * x)) <= tol * max(1.0, abs(lam)):
            return lam
        x = y / norm
    return lam


def spectral_radius_gabp_test(system: SymSystem) -> float:
    """rho(|I - D^-1 A|), the walk-summability style convergence diagnostic.

    Power iteration on the elementwise-absolute matrix, started at the
    all-ones vector.  A +I Perron shift keeps the iteration convergent on
    bipartite structures whose extreme eigenvalues tie in magnitude.
    """
    if np.any(system.diag == 0.0):
        row = int(np.flatnonzero(system.diag == 0.0)[0])
        raise ZeroDiagonalError(f"zero diagonal entry at row {row}")
    n = system.n
    m = np.zeros((n, n))
    for (i, j), v in system.offdiag.items():
        m[i, j] = abs(v / system.diag[i])
        m[j, i] = abs(v / system.diag[j])
    shifted = _power_iteration(lambda x: m @ x + x, n)
    return max(shifted - 1.0, 0.0)


def dominance_class(system: SymSystem) -> str:
    """Classify diagonal dominance as 'strict', 'weak' or 'none'."""
    offsums = np.zeros(system.n)
    for (i, j), v in system.offdiag.items():
        offsums[i] += abs(v)
        offsums[j] += abs(v)
    absdiag = np.abs(system.diag)
    if np.all(absdiag > offsums):
        return "strict"
    if np.all(absdiag >= offsums):
        return "weak"
    return "none"


def direct_solve_ge(system: SymSystem) -> np.ndarray:
    """Dense Gaussian elimination with partial pivoting."""
    a, b = system.to_dense()
    n = system.n
    scale = float(np.max(np.abs(a))) or 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= 1e-14 * scale:
            raise SingularMatrixError(f"singular pivot in column {k}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        b[k + 1 :] -= factors * b[k]
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x


def condition_number_normal(system: SymSystem) -> float:
    """|lambda_max| / |lambda_min| for a symmetric matrix.

    The extremes are estimated by power iteration on A^2 (squaring merges
    a +/- magnitude tie into a simple dominant eigenvalue) and inverse
    iteration through repeated direct solves.  Singular-to-working-precision
    matrices get the infinity sentinel.
    """
    a, _ = system.to_dense()
    lam_max_sq = _power_iteration(lambda x: a @ (a @ x), system.n)
    lam_max = math.sqrt(lam_max_sq)
    if lam_max == 0.0:
        return math.inf
    try:
        inv_sq = _power_iteration(
            lambda x: direct_solve_ge(system.with_rhs(direct_solve_ge(system.with_rhs(x)))),
            system.n,
        )
    except SingularMatrixError:
        return math.inf
    if inv_sq == 0.0:
        return math.inf
    lam_min = 1.0 / math.sqrt(inv_sq)
    if lam_min < 1e-12 * lam_max:
        return math.inf
    return lam_max / lam_min
