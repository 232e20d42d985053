"""Truncated Fock-basis states, Gaussian unitaries, and phase-space oracles.

The single universal state representation is a density matrix on the
truncated basis |0>..|d-1> together with an explicit ``trace_deficit``:
the probability mass lost to truncation.  Nothing here assumes the
physical state has bounded support; instead every operation that can
leak mass accounts for it, so downstream consumers can certify their own
approximation error rather than silently clipping.

Conventions (fixed throughout the package):

    D(beta) = exp(beta a^dag - conj(beta) a)
    S(xi)   = exp((xi a^2 - conj(xi) a^dag^2) / 2),   xi = r e^{i theta}
    G       = S(xi) D(beta)   (squeeze applied after the displacement)
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffError, DomainError, UndefinedSubtractionError
from .specfun import log_factorial

__all__ = [
    "GaussianUnitaryParams",
    "TruncatedState",
    "CoreState",
    "TargetOperator",
    "make_fock",
    "make_lossy_fock",
    "make_thermal",
    "make_squeezed_thermal",
    "photon_subtract",
    "photon_add",
    "gaussian_matrix",
    "gaussian_matrix_element",
    "apply_gaussian",
    "husimi_q",
    "coherent_row",
    "wigner",
    "fidelity",
    "db_to_r",
]

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-9
DEFICIT_TOL = 1e-6

_MAX_AUTO_DIM = 4096


def db_to_r(db: float) -> float:
    """Squeezing parameter r for a quadrature-noise reduction in dB."""
    return db * math.log(10.0) / 20.0


@dataclass(frozen=True)
class GaussianUnitaryParams:
    """Parameters of G = S(xi) D(beta) with xi = squeeze_r e^{i squeeze_theta}."""

    squeeze_r: float = 0.0
    squeeze_theta: float = 0.0
    displacement: complex = 0j

    def __post_init__(self):
        if self.squeeze_r < 0:
            raise DomainError("squeeze_r must be nonnegative")

    @property
    def xi(self) -> complex:
        return self.squeeze_r * cmath.exp(1j * self.squeeze_theta)

    @property
    def is_identity(self) -> bool:
        return self.squeeze_r == 0.0 and self.displacement == 0j

    def inverse(self) -> "GaussianUnitaryParams":
        """Parameters of G^dag, rewritten in S D order.

        G^dag = D(-beta) S(-xi) = S(-xi) D(beta') with
        beta' = -beta cosh r + conj(beta) e^{-i theta} sinh r.
        """
        r, th, b = self.squeeze_r, self.squeeze_theta, self.displacement
        beta_p = -b * math.cosh(r) + np.conj(b) * cmath.exp(-1j * th) * math.sinh(r)
        theta_p = math.remainder(th + math.pi, 2 * math.pi)
        return GaussianUnitaryParams(r, theta_p, complex(beta_p))


class TruncatedState:
    """Density matrix on the Fock basis |0>..|dim-1> with trace accounting.

    Invariants (validated on construction):
      * Hermitian within 1e-12,
      * positive semidefinite within -1e-10 on the smallest eigenvalue,
      * Tr(rho) + trace_deficit = 1 within 1e-9.
    """

    def __init__(self, matrix, trace_deficit: float = 0.0, validate: bool = True):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("state matrix must be square")
        self.matrix = m
        self.dim = m.shape[0]
        self.trace_deficit = float(trace_deficit)
        if validate:
            self.validate()

    def validate(self):
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm > HERMITICITY_TOL:
            raise DomainError(f"state not Hermitian: max asymmetry {herm:.3e}")
        if self.trace_deficit < -TRACE_TOL:
            raise DomainError("trace_deficit must be nonnegative")
        tr = float(np.real(np.trace(m)))
        if abs(tr + self.trace_deficit - 1.0) > TRACE_TOL:
            raise DomainError(
                f"trace {tr:.12f} + deficit {self.trace_deficit:.3e} != 1"
            )
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -PSD_TOL:
            raise DomainError(f"state not PSD: min eigenvalue {lo:.3e}")

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def mean_photon(self) -> float:
        """<n> of the truncated matrix, renormalized by its trace."""
        k = np.arange(self.dim)
        return float(k @ self.populations() / self.trace)

    def var_photon(self) -> float:
        k = np.arange(self.dim)
        p = self.populations() / self.trace
        m1 = float(k @ p)
        return float((k * k) @ p - m1 * m1)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.int64(self.dim).tobytes())
        h.update(np.ascontiguousarray(self.matrix).tobytes())
        h.update(np.float64(self.trace_deficit).tobytes())
        return h.hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": np.real(self.matrix).tolist(),
            "im": np.imag(self.matrix).tolist(),
            "trace_deficit": self.trace_deficit,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TruncatedState":
        m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        if m.shape != (d["dim"], d["dim"]):
            raise DomainError("state JSON dim does not match matrix shape")
        return cls(m, trace_deficit=float(d.get("trace_deficit", 0.0)))


@dataclass(frozen=True)
class CoreState:
    """Finite-rank pure state S(xi) D(beta) sum_m c_m |m>.

    ``coeffs`` are the core coefficients c_0..c_n, normalized to 1; the
    leading coefficient must be nonzero (it defines the stellar rank n).
    """

    coeffs: tuple
    gaussian_frame: GaussianUnitaryParams = field(default_factory=GaussianUnitaryParams)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise DomainError("core coefficients must be a nonempty vector")
        if abs(np.vdot(c, c).real - 1.0) > 1e-12:
            raise DomainError("core coefficients must be normalized")
        if abs(c[-1]) < 1e-12:
            raise DomainError("leading core coefficient must be nonzero")
        object.__setattr__(self, "coeffs", tuple(complex(x) for x in c))

    @classmethod
    def fock(cls, n: int) -> "CoreState":
        c = np.zeros(n + 1, dtype=complex)
        c[n] = 1.0
        return cls(tuple(c))

    @classmethod
    def from_unnormalized(
        cls, coeffs, frame: GaussianUnitaryParams | None = None
    ) -> "CoreState":
        c = np.asarray(coeffs, dtype=complex)
        while c.size > 1 and abs(c[-1]) < 1e-14:
            c = c[:-1]
        nrm = math.sqrt(np.vdot(c, c).real)
        if nrm == 0.0:
            raise DomainError("cannot normalize zero coefficient vector")
        return cls(tuple(c / nrm), frame or GaussianUnitaryParams())

    @property
    def stellar_rank(self) -> int:
        return len(self.coeffs) - 1

    def fock_vector(self, n_max: int) -> np.ndarray:
        """Amplitudes <n|psi> for n < n_max (exact per component)."""
        c = np.asarray(self.coeffs, dtype=complex)
        g = self.gaussian_frame
        if g.squeeze_r == 0.0 and g.displacement == 0j:
            v = np.zeros(n_max, dtype=complex)
            v[: min(n_max, c.size)] = c[:n_max]
            return v
        u = gaussian_matrix(n_max, c.size, g)
        return u @ c

    def to_state(self, dim: int, deficit_tol: float = DEFICIT_TOL) -> TruncatedState:
        v = self.fock_vector(dim)
        deficit = max(0.0, 1.0 - float(np.vdot(v, v).real))
        if deficit > deficit_tol:
            need = dim
            while need < _MAX_AUTO_DIM:
                need *= 2
                w = self.fock_vector(need)
                if 1.0 - float(np.vdot(w, w).real) <= deficit_tol:
                    break
            raise CutoffError(
                f"core state truncation loses {deficit:.3e} > {deficit_tol:.1e}; "
                f"try dim={need}",
                suggested_dim=need,
            )
        return TruncatedState(np.outer(v, v.conj()), trace_deficit=deficit)


class TargetOperator:
    """Operator A = sum_kl A_kl |k><l| with bounded Fock support."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("target operator matrix must be square")
        self.matrix = m
        self.dim = m.shape[0]

    @classmethod
    def fock_projector(cls, n: int) -> "TargetOperator":
        m = np.zeros((n + 1, n + 1), dtype=complex)
        m[n, n] = 1.0
        return cls(m)

    @classmethod
    def core_projector(cls, core: CoreState) -> "TargetOperator":
        if core.gaussian_frame.squeeze_r or core.gaussian_frame.displacement:
            raise DomainError(
                "core_projector takes a frameless core state; revert the frame "
                "on the sample side (unbalancing + translation) instead"
            )
        c = np.asarray(core.coeffs, dtype=complex)
        return cls(np.outer(c, c.conj()))

    @property
    def is_diagonal(self) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return not np.any(off)

    def diagonal_entries(self):
        """(index, weight) pairs of nonzero real diagonal entries."""
        d = np.diag(self.matrix)
        return [(int(k), float(np.real(w))) for k, w in enumerate(d) if w != 0]

    def support_indices(self):
        ks, ls = np.nonzero(self.matrix)
        return list(zip(ks.tolist(), ls.tolist()))


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def make_fock(n: int, dim: int) -> TruncatedState:
    """Pure Fock state |n><n| on a cutoff-dim basis."""
    if n < 0:
        raise DomainError("photon number must be nonnegative")
    if n >= dim:
        raise CutoffError(f"Fock index {n} does not fit below cutoff {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[n, n] = 1.0
    return TruncatedState(m)


def make_lossy_fock(n: int, eta: float, dim: int) -> TruncatedState:
    """|n> through a transmissivity-eta loss channel (binomial populations)."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"loss efficiency must lie in [0, 1], got {eta}")
    if n >= dim:
        raise CutoffError(f"Fock index {n} does not fit below cutoff {dim}")
    pops = np.zeros(dim)
    for k in range(n + 1):
        logp = (
            log_factorial(n)
            - log_factorial(k)
            - log_factorial(n - k)
            + (k * math.log(eta) if eta > 0 else (0.0 if k == 0 else -math.inf))
            + ((n - k) * math.log(1 - eta) if eta < 1 else (0.0 if k == n else -math.inf))
        )
        pops[k] = math.exp(logp) if logp > -math.inf else 0.0
    return TruncatedState(np.diag(pops.astype(complex)))


def make_thermal(nbar: float, dim: int) -> TruncatedState:
    """Thermal state with mean occupation nbar, truncated at dim."""
    if nbar < 0:
        raise DomainError("thermal occupation must be nonnegative")
    if nbar == 0:
        return make_fock(0, dim)
    k = np.arange(dim)
    p = np.exp(k * math.log(nbar / (1 + nbar)) - math.log(1 + nbar))
    deficit = (nbar / (1 + nbar)) ** dim
    return TruncatedState(np.diag(p.astype(complex)), trace_deficit=deficit)


def make_squeezed_thermal(
    r: float, theta: float, purity: float, dim: int, deficit_tol: float = DEFICIT_TOL
) -> TruncatedState:
    """S(xi) rho_thermal S(xi)^dag with occupation nbar = (1/purity - 1)/2.

    The squeezed thermal family is the standard one-parameter impurity
    model whose output purity equals the requested preparation purity
    exactly (unitaries preserve purity).
    """
    if not 0.0 < purity <= 1.0:
        raise DomainError(f"purity must lie in (0, 1], got {purity}")
    nbar = (1.0 / purity - 1.0) / 2.0
    g = GaussianUnitaryParams(r, theta, 0j)
    work = max(2 * dim, 32)
    while True:
        th = make_thermal(nbar, work)
        if th.trace_deficit > deficit_tol / 100 and work < _MAX_AUTO_DIM:
            work *= 2
            continue
        big = apply_gaussian(th, g, out_dim=2 * work, deficit_tol=deficit_tol / 10)
        break
    block = big.matrix[:dim, :dim]
    deficit = max(0.0, 1.0 - float(np.real(np.trace(block))))
    if deficit > deficit_tol:
        pops = np.real(np.diag(big.matrix))
        tail = 1.0 - np.cumsum(pops)
        ok = np.nonzero(tail <= deficit_tol / 2)[0]
        need = int(ok[0]) + 1 if ok.size else 2 * big.dim
        raise CutoffError(
            f"squeezed-thermal truncation loses {deficit:.3e} > {deficit_tol:.1e}; "
            f"try dim={need}",
            suggested_dim=need,
        )
    return TruncatedState(block, trace_deficit=deficit)


def photon_subtract(state: TruncatedState) -> TruncatedState:
    """Post-selected annihilation: a rho a^dag renormalized, dim - 1."""
    k = np.arange(1, state.dim)
    norm = float(k @ np.real(np.diag(state.matrix))[1:])
    if norm <= 1e-12:
        raise UndefinedSubtractionError(
            "photon subtraction undefined: Tr(a rho a^dag) vanishes"
        )
    amp = np.sqrt(np.arange(1, state.dim, dtype=float))
    out = state.matrix[1:, 1:] * np.outer(amp, amp)
    out = out / norm * (1.0 - state.trace_deficit)
    return TruncatedState(out, trace_deficit=state.trace_deficit)


def photon_add(state: TruncatedState) -> TruncatedState:
    """Post-selected creation: a^dag rho a renormalized, dim + 1."""
    d = state.dim
    norm = float((np.arange(d) + 1.0) @ np.real(np.diag(state.matrix)))
    out = np.zeros((d + 1, d + 1), dtype=complex)
    amp = np.sqrt(np.arange(1, d + 1, dtype=float))
    out[1:, 1:] = state.matrix * np.outer(amp, amp)
    out = out / norm * (1.0 - state.trace_deficit)
    return TruncatedState(out, trace_deficit=state.trace_deficit)


# ---------------------------------------------------------------------------
# Gaussian unitary matrix elements
# ---------------------------------------------------------------------------
#
# The displacement block is evaluated exactly, element by element, through
# the associated-Laguerre closed form (a stable upward recurrence along
# each diagonal); the squeeze block through its finite parity sum when the
# smaller index stays below ~24 (few alternating terms, no cancellation),
# and through an adaptively padded, self-consistency-checked matrix
# exponential otherwise.  The naive coupled (n, m) recurrence amplifies a
# parasitic solution like (cosh r + sinh r)^n sqrt(width^n / n!) and is
# kept only as a small-size cross-check in the test suite.

_SQUEEZE_CLOSED_MAX = 24


def _displacement_matrix(n_rows: int, m_cols: int, beta: complex) -> np.ndarray:
    """<n| D(beta) |m>: for n >= m equals
    sqrt(m!/n!) beta^{n-m} e^{-|b|^2/2} L_m^{(n-m)}(|b|^2); the upper
    triangle follows with beta -> -conj(beta)."""
    if beta == 0:
        out = np.zeros((n_rows, m_cols), dtype=complex)
        np.fill_diagonal(out, 1.0)
        return out
    x = abs(beta) ** 2
    out = np.zeros((n_rows, m_cols), dtype=complex)
    lf = log_factorial(np.arange(max(n_rows, m_cols)))
    log_b = math.log(abs(beta))
    unit = beta / abs(beta)
    for a in range(n_rows):  # lower diagonals: n = m + a
        length = min(m_cols, n_rows - a)
        if length <= 0:
            break
        cur, prev = 1.0, 0.0
        phase = unit**a
        for m in range(length):
            if m > 0:
                prev, cur = cur, ((2 * (m - 1) + a + 1 - x) * cur - (m - 1 + a) * prev) / m
            if cur != 0.0:
                logmag = a * log_b + 0.5 * (lf[m] - lf[m + a]) - 0.5 * x + math.log(abs(cur))
                out[m + a, m] = math.copysign(1.0, cur) * phase * math.exp(logmag)
    unit_u = -np.conj(beta) / abs(beta)
    for a in range(1, m_cols):  # upper diagonals: m = n + a
        length = min(n_rows, m_cols - a)
        if length <= 0:
            break
        cur, prev = 1.0, 0.0
        phase = unit_u**a
        for n in range(length):
            if n > 0:
                prev, cur = cur, ((2 * (n - 1) + a + 1 - x) * cur - (n - 1 + a) * prev) / n
            if cur != 0.0:
                logmag = a * log_b + 0.5 * (lf[n] - lf[n + a]) - 0.5 * x + math.log(abs(cur))
                out[n, n + a] = math.copysign(1.0, cur) * phase * math.exp(logmag)
    return out


def _displacement_columns(n_rows: int, beta: complex, m_cols: int) -> np.ndarray:
    """<k| D(beta) |j> for k < n_rows, j < m_cols, vectorized over k.

    Intended for small m_cols (core vectors); the associated-Laguerre
    value is assembled in log magnitude so huge binomials against tiny
    Gaussian factors cannot overflow.
    """
    if beta == 0:
        out = np.zeros((n_rows, m_cols), dtype=complex)
        np.fill_diagonal(out, 1.0)
        return out
    from scipy.special import gammaln

    x = abs(beta) ** 2
    logb = math.log(abs(beta))
    ang = cmath.phase(beta)
    lf = log_factorial(np.arange(max(n_rows, m_cols) + 1))
    out = np.zeros((n_rows, m_cols), dtype=complex)
    k_all = np.arange(n_rows)
    for j in range(m_cols):
        rows = k_all[j:]
        a = rows - j
        lag = np.zeros(rows.size)
        for i in range(j + 1):
            lag += (
                (-1.0) ** i
                * np.exp(gammaln(j + a + 1.0) - gammaln(a + i + 1.0) - lf[j - i])
                * x**i
                / math.exp(lf[i])
            )
        nz = lag != 0.0
        logmag = 0.5 * (lf[j] - lf[rows[nz]]) + a[nz] * logb - 0.5 * x + np.log(np.abs(lag[nz]))
        out[rows[nz], j] = np.sign(lag[nz]) * np.exp(logmag + 1j * a[nz] * ang)
        for k in range(min(j, n_rows)):  # upper triangle, at most m_cols rows
            a2 = j - k
            cur, prev = 1.0, 0.0
            for m in range(1, k + 1):
                prev, cur = cur, ((2 * (m - 1) + a2 + 1 - x) * cur - (m - 1 + a2) * prev) / m
            if cur != 0.0:
                lm = a2 * logb + 0.5 * (lf[k] - lf[j]) - 0.5 * x + math.log(abs(cur))
                out[k, j] = math.copysign(1.0, cur) * (-cmath.exp(-1j * ang)) ** a2 * math.exp(lm)
    return out


def _squeeze_matrix_closed(n_rows: int, m_cols: int, r: float, th: float) -> np.ndarray:
    """<n| S(xi) |m> by the parity sum

    sum_l (-e^{-i th} t/2)^{j} / j! * (e^{i th} t/2)^{k} / k!
          * cosh(r)^{-l-1/2} sqrt(n! m!) / l!,
    j = (n-l)/2, k = (m-l)/2, over l = min parity..min(n, m).

    The sum has min(n, m)/2 + 1 alternating terms; accurate while the
    smaller index is modest.
    """
    c, t = math.cosh(r), math.tanh(r)
    out = np.zeros((n_rows, m_cols), dtype=complex)
    if r == 0.0:
        np.fill_diagonal(out, 1.0)
        return out
    lf = log_factorial(np.arange(n_rows + m_cols + 2))
    log_t2 = math.log(t / 2.0)
    log_c = math.log(c)
    m_all = np.arange(m_cols)
    for n in range(n_rows):
        for l in range(n % 2, n + 1, 2):
            j = (n - l) // 2
            ms = m_all[(m_all >= l) & ((m_all - l) % 2 == 0)]
            if ms.size == 0:
                continue
            k = (ms - l) // 2
            logmag = (
                (j + k) * log_t2
                - lf[j]
                - lf[k]
                - (l + 0.5) * log_c
                + 0.5 * (lf[n] + lf[ms])
                - lf[l]
            )
            phase = (-cmath.exp(-1j * th)) ** j * np.exp(1j * th * k)
            out[n, ms] += phase * np.exp(logmag)
    return out


from functools import lru_cache


@lru_cache(maxsize=16)
def _squeeze_expm_full(r: float, th: float, pad: int) -> np.ndarray:
    from scipy.linalg import expm

    a = np.diag(np.sqrt(np.arange(1, pad)), 1)
    ad = a.conj().T
    xi = r * cmath.exp(1j * th)
    out = expm(0.5 * (xi * a @ a - np.conj(xi) * ad @ ad))
    out.setflags(write=False)
    return out


def _pad_ladder(x: int) -> int:
    """Quantize pads to a geometric ladder so repeated growth hits the cache."""
    pad = 64
    while pad < x:
        pad = int(1.5 * pad)
    return pad


def _squeeze_matrix_expm(n_rows: int, m_cols: int, r: float, th: float) -> np.ndarray:
    """Padded, cached matrix exponential of the squeeze generator; the pad
    grows until the requested block is self-consistent to 1e-12."""
    pad = _pad_ladder(max(n_rows, m_cols) + 48)
    cur = _squeeze_expm_full(r, th, pad)[:n_rows, :m_cols]
    while pad < _MAX_AUTO_DIM:
        pad = _pad_ladder(pad + 1)
        nxt = _squeeze_expm_full(r, th, pad)[:n_rows, :m_cols]
        if np.max(np.abs(nxt - cur)) < 1e-12:
            return nxt
        cur = nxt
    return cur


def _squeeze_block(n_rows: int, m_cols: int, r: float, th: float) -> np.ndarray:
    if min(n_rows, m_cols) <= _SQUEEZE_CLOSED_MAX:
        return _squeeze_matrix_closed(n_rows, m_cols, r, th)
    return _squeeze_matrix_expm(n_rows, m_cols, r, th)


def gaussian_matrix(n_rows: int, m_cols: int, g: GaussianUnitaryParams) -> np.ndarray:
    """Matrix u[n, m] = <n| S(xi) D(beta) |m> for n < n_rows, m < m_cols.

    Pure displacements and pure squeezes use their direct blocks; the
    general case composes u = S @ D over an inner index grown until the
    requested block stops changing (tail below 1e-12).
    """
    r, th, b = g.squeeze_r, g.squeeze_theta, complex(g.displacement)
    if r == 0.0:
        return _displacement_matrix(n_rows, m_cols, b)
    if b == 0:
        return _squeeze_block(n_rows, m_cols, r, th)
    spread = int(math.ceil(8.0 * abs(b) ** 2 + 8.0 * abs(b)))
    inner = n_rows + m_cols + 32 + spread
    cur = None
    while True:
        s_blk = _squeeze_block(n_rows, inner, r, th)
        d_blk = _displacement_matrix(inner, m_cols, b)
        nxt = s_blk @ d_blk
        if cur is not None and np.max(np.abs(nxt - cur)) < 1e-12:
            return nxt
        if inner >= _MAX_AUTO_DIM:
            return nxt
        cur = nxt
        inner = int(1.4 * inner) + 16


def gaussian_matrix_element(n: int, m: int, g: GaussianUnitaryParams) -> complex:
    """<n| S(xi) D(beta) |m>."""
    if n < 0 or m < 0:
        raise DomainError("Fock indices must be nonnegative")
    return complex(gaussian_matrix(n + 1, m + 1, g)[n, m])


def compose_gaussians(g1: GaussianUnitaryParams, g2: GaussianUnitaryParams):
    """Rewrite G1 G2 as S(xi) D(beta) R(phi) up to a global phase.

    R(phi) = exp(-i phi n) is a Fock-diagonal rotation, so the extra
    factor acts on a core vector as the phases e^{-i j phi}.  Working in
    the Heisenberg picture, each G maps a -> A a + B a^dag + gamma with
    |A|^2 - |B|^2 = 1; composition multiplies these affine maps and the
    (xi, beta, phi) triple is read back from the composite.
    """

    def affine(g: GaussianUnitaryParams):
        c, s = math.cosh(g.squeeze_r), math.sinh(g.squeeze_r)
        a_coef = c + 0j
        b_coef = -cmath.exp(-1j * g.squeeze_theta) * s
        gamma = g.displacement * c + np.conj(g.displacement) * b_coef
        return a_coef, b_coef, gamma

    a1, b1, c1 = affine(g1)
    a2, b2, c2 = affine(g2)
    a = a1 * a2 + b1 * np.conj(b2)
    b = a1 * b2 + b1 * np.conj(a2)
    gamma = a1 * c2 + b1 * np.conj(c2) + c1
    r = math.asinh(abs(b))
    phi = -cmath.phase(a)
    if abs(b) > 0:
        th = -cmath.phase(-b * cmath.exp(-1j * phi))
    else:
        th = 0.0
    beta = np.conj(a) * gamma - b * np.conj(gamma)
    beta_tilde = cmath.exp(-1j * phi) * beta
    return GaussianUnitaryParams(r, th, complex(beta_tilde)), phi


def apply_gaussian(
    state: TruncatedState,
    g: GaussianUnitaryParams,
    out_dim: int | None = None,
    deficit_tol: float = DEFICIT_TOL,
) -> TruncatedState:
    """G rho G^dag truncated to out_dim, with exact trace accounting.

    The congruence U rho U^dag with the rectangular block of exact matrix
    elements transforms the truncated input exactly; the only new leakage
    is output mass above out_dim, which is added to the trace deficit.
    With ``out_dim=None`` the cutoff grows until the new leakage is below
    deficit_tol / 10.
    """
    auto = out_dim is None
    dim = out_dim if out_dim else max(2 * state.dim, 32)
    tr_in = state.trace
    while True:
        u = gaussian_matrix(dim, state.dim, g)
        out = u @ state.matrix @ u.conj().T
        out = 0.5 * (out + out.conj().T)
        leak = max(0.0, tr_in - float(np.real(np.trace(out))))
        if auto and leak > deficit_tol / 10 and dim < _MAX_AUTO_DIM:
            dim *= 2
            continue
        break
    deficit = state.trace_deficit + leak
    if deficit > deficit_tol:
        raise CutoffError(
            f"apply_gaussian deficit {deficit:.3e} exceeds {deficit_tol:.1e}; "
            f"try out_dim={2 * dim}",
            suggested_dim=2 * dim,
        )
    return TruncatedState(out, trace_deficit=deficit)


# ---------------------------------------------------------------------------
# Phase-space functions and fidelity
# ---------------------------------------------------------------------------


def coherent_row(z, dim: int) -> np.ndarray:
    """Rows w[i, k] = <k|z_i> = e^{-|z|^2/2} z^k / sqrt(k!), built iteratively."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.empty((z.size, dim), dtype=complex)
    w[:, 0] = np.exp(-0.5 * np.abs(z) ** 2)
    for k in range(1, dim):
        w[:, k] = w[:, k - 1] * z / math.sqrt(k)
    return w


def husimi_q(state: TruncatedState, z):
    """Husimi function Q(z) = <z| rho |z> / pi; scalar or array argument."""
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    w = coherent_row(zz, state.dim)
    vals = np.einsum("nk,kl,nl->n", w.conj(), state.matrix, w).real / math.pi
    return vals if np.ndim(z) else float(vals[0])


def wigner(state: TruncatedState, alpha: complex) -> float:
    """Wigner function via the displaced-parity identity.

    W(alpha) = (2/pi) Tr[D(alpha) P D^dag(alpha) rho] = (2/pi) Tr[D(2 alpha) P rho]
    with P the Fock parity; the trace runs over the state's finite support
    only, so the result is exact up to the state's own trace deficit
    (absolute error at most (2/pi) * trace_deficit).
    """
    d = state.dim
    disp = gaussian_matrix(d, d, GaussianUnitaryParams(0.0, 0.0, 2 * complex(alpha)))
    parity = (-1.0) ** np.arange(d)
    val = np.einsum("nk,kn->", disp, parity[:, None] * state.matrix)
    return float(2.0 / math.pi * np.real(val))


def fidelity(state: TruncatedState, target: CoreState) -> float:
    """F(rho, psi) = <psi| rho |psi> for a finite-rank pure target."""
    v = target.fock_vector(state.dim)
    val = float(np.real(np.vdot(v, state.matrix @ v)))
    return val
