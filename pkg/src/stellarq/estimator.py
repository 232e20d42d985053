"""Expectation-value estimation from double-homodyne samples.

Given i.i.d. outcomes alpha_1..alpha_N of balanced double homodyne
detection of rho, the sample mean of a kernel g_A^{(p)}(alpha_i, eta)
estimates Tr(A rho) for any operator A with bounded Fock support.  The
kernel family is built from Laguerre 2D polynomials:

    f_kl(z, eta)  = eta^{-(1+(k+l)/2)} e^{(1-1/eta)|z|^2} L2D_{k,l}(z/sqrt(eta))
    g_kl^{(p)}    = sum_{j<p} (-1)^j f_{k+j,l+j} eta^j sqrt(C(k+j,k) C(l+j,l))

The Laguerre 2D index order is fixed so that the sample mean of
g_A^{(p)} estimates Tr(A rho) (checked against exact Gaussian moments in
the tests); on the diagonal, where every tabulated quantity lives, the
order is immaterial.

For diagonal targets the kernel is radial and real; recentering it by
half the analytic bias bound gives the estimator h_n^{(p)} whose
deviation splits into a Hoeffding term lambda and the bias term, yielding
fully analytic (epsilon, delta) trade-offs.  A CLT variant replaces the
kernel range by the empirical variance; it is tighter but no longer
analytic, and is flagged as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfinv

from . import specfun
from .errors import (
    DomainError,
    InfeasiblePrecisionError,
    InsufficientSamplesError,
    UnsupportedTargetError,
)
from .fockspace import TargetOperator

__all__ = [
    "EstimatorConfig",
    "ConfidenceEstimate",
    "kernel_f",
    "kernel_g",
    "kernel_g_operator",
    "pn_threshold",
    "bias_bound",
    "kernel_h",
    "kernel_range",
    "kernel_values",
    "estimate",
    "required_samples",
    "achieved_delta",
    "clt_required_samples",
    "optimize_params",
    "OptimizeResult",
]

_CHUNK = 1 << 20  # fixed summation chunk: partition-independent totals


def _check_eta(eta: float) -> None:
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta must lie strictly inside (0, 1), got {eta}")


def pn_threshold(n: int, p: int, eta: float) -> int:
    """Smallest q >= p with eta <= (1 - (p-1)/q)(1 - n/(n+q+1)).

    Exists for every eta < 1 because the right-hand side increases to 1.
    """
    _check_eta(eta)
    if p < 1 or n < 0:
        raise DomainError("need p >= 1 and n >= 0")
    q = p
    while True:
        if eta <= (1.0 - (p - 1) / q) * (1.0 - n / (n + q + 1)):
            return q
        q += 1
        if q > 10_000_000:  # unreachable for eta < 1; guards float misuse
            raise DomainError("pn_threshold failed to terminate")


def _bias_full(n: int, p: int, eta: float) -> float:
    """Full-width bias bound eta^{p_n} C(p_n-1, p-1) C(n+p_n, n)."""
    pn = pn_threshold(n, p, eta)
    log = (
        pn * math.log(eta)
        + specfun.log_binomial(pn - 1, p - 1)
        + specfun.log_binomial(n + pn, n)
    )
    return math.exp(log)


def bias_bound(n: int, p: int, eta: float) -> float:
    """Half-width bias bound of the recentered estimator h_n^{(p)}."""
    return 0.5 * _bias_full(n, p, eta)


def kernel_f(k: int, l: int, z: complex, eta: float) -> complex:
    """f_{k,l}(z, eta), assembled in log space to survive any argument."""
    _check_eta(eta)
    z = complex(z)
    w = z / math.sqrt(eta)
    log_mag, phase = specfun.laguerre2d_logpolar(k, l, w)
    if phase == 0:
        return 0j
    log_mag += (1.0 - 1.0 / eta) * abs(z) ** 2 - (1.0 + (k + l) / 2.0) * math.log(eta)
    return complex(math.exp(log_mag) * phase)


def kernel_g(k: int, l: int, p: int, z: complex, eta: float) -> complex:
    """Alternating sum g_{k,l}^{(p)}(z, eta) of shifted f kernels."""
    if p < 1:
        raise DomainError("p must be a positive integer")
    total = 0j
    for j in range(p):
        wt = math.exp(
            j * math.log(eta)
            + 0.5 * (specfun.log_binomial(k + j, k) + specfun.log_binomial(l + j, l))
        )
        total += (-1) ** j * wt * kernel_f(k + j, l + j, z, eta)
    return total


def kernel_g_operator(a: TargetOperator, p: int, z: complex, eta: float) -> complex:
    """g_A^{(p)}(z, eta) = sum_kl A_kl g_{k,l}^{(p)}(z, eta)."""
    total = 0j
    for k, l in a.support_indices():
        total += a.matrix[k, l] * kernel_g(k, l, p, z, eta)
    return complex(total)


def kernel_h(n: int, p: int, z: complex, eta: float) -> float:
    """Recentered diagonal kernel h_n^{(p)}; real by radial symmetry."""
    g = kernel_g(n, n, p, z, eta)
    return float(g.real + 0.5 * (-1) ** p * _bias_full(n, p, eta))


# ---------------------------------------------------------------------------
# Radial form of diagonal kernels
# ---------------------------------------------------------------------------


def _diag_weights(entries, p: int, eta: float) -> np.ndarray:
    """Laguerre-expansion weights of a weighted diagonal kernel.

    sum_k a_k g_{k,k}^{(p)}(z, eta)
        = e^{-(1-eta) x} sum_m w_m L_m(x),   x = |z|^2 / eta,
    with w_m = sum_k a_k (-1)^k eta^{-(k+1)} C(m, k) for m - k in [0, p).
    """
    deg = max(k for k, _ in entries) + p - 1
    w = np.zeros(deg + 1)
    for k, a in entries:
        for j in range(p):
            w[k + j] += (
                a * (-1) ** k * math.exp(specfun.log_binomial(k + j, k) - (k + 1) * math.log(eta))
            )
    return w


def _radial_eval(weights: np.ndarray, eta: float, x: np.ndarray) -> np.ndarray:
    """e^{-(1-eta) x} sum_m weights[m] L_m(x) by one Laguerre recurrence."""
    x = np.asarray(x, dtype=float)
    acc = np.full_like(x, weights[0])
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for m in range(len(weights) - 1):
        prev, cur = cur, ((2 * m + 1 - x) * cur - m * prev) / (m + 1)
        if weights[m + 1] != 0.0:
            acc = acc + weights[m + 1] * cur
    return np.exp(-(1.0 - eta) * x) * acc


def _radial_eval_scalar(weights, eta: float, x: float) -> float:
    """Scalar twin of _radial_eval in plain floats (hot in refinement)."""
    acc = weights[0]
    prev = 0.0
    cur = 1.0
    for m in range(len(weights) - 1):
        prev, cur = cur, ((2 * m + 1 - x) * cur - m * prev) / (m + 1)
        acc += weights[m + 1] * cur
    return math.exp(-(1.0 - eta) * x) * acc


def _radial_range(weights: np.ndarray, eta: float) -> float:
    """Range over x >= 0 (closure includes the x -> inf limit 0).

    Dense scan of 1e4 points out to a certified tail radius, followed by
    golden-section refinement of every bracketed local extremum.
    """
    deg = len(weights) - 1
    c = 1.0 - eta
    x_osc = 4.0 * deg + 16.0
    # beyond x_end the envelope e^{-c x} * sum_i b_i x^i is decreasing
    # (once x > deg / c) and smaller than 1e-3 of the scanned range;
    # b_i = sum_m |w_m| C(m, i) / i! bounds every |L_m| coefficient-wise
    abs_coeff = np.zeros(deg + 1)
    for m in range(deg + 1):
        if weights[m] == 0.0:
            continue
        for i in range(m + 1):
            abs_coeff[i] += abs(weights[m]) * math.exp(
                specfun.log_binomial(m, i) - specfun.log_factorial(i)
            )

    def env(x):
        poly = 0.0
        for b in abs_coeff[::-1]:
            poly = poly * x + b
        return math.exp(-c * x) * poly

    x_end = max(x_osc, 1.5 * deg / c if c > 0 else x_osc)
    xs = np.linspace(0.0, x_end, 10_001)
    vals = _radial_eval(weights, eta, xs)
    lo = min(float(vals.min()), 0.0)
    hi = max(float(vals.max()), 0.0)
    while env(x_end) > 1e-3 * max(hi - lo, 1e-300) and x_end < 1e7:
        x_new = x_end * 1.5
        xs2 = np.linspace(x_end, x_new, 2_000)
        v2 = _radial_eval(weights, eta, xs2)
        lo = min(lo, float(v2.min()))
        hi = max(hi, float(v2.max()))
        x_end = x_new
        xs = np.concatenate([xs, xs2])
        vals = np.concatenate([vals, v2])

    wl = weights.tolist()

    def f(x):
        return _radial_eval_scalar(wl, eta, x)

    # golden refinement of interior extrema
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    d = np.diff(vals)
    turn = np.nonzero(d[:-1] * d[1:] < 0)[0] + 1
    for i in turn:
        a, b = xs[i - 1], xs[i + 1]
        sign = 1.0 if vals[i] >= max(vals[i - 1], vals[i + 1]) else -1.0
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1, f2 = sign * f(x1), sign * f(x2)
        for _ in range(60):
            if f1 >= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = sign * f(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = sign * f(x2)
            if b - a < 1e-10 * (1.0 + b):
                break
        ext = sign * max(f1, f2)
        lo = min(lo, ext)
        hi = max(hi, ext)
    return hi - lo


def _diagonal_entries_checked(target: TargetOperator):
    if not target.is_diagonal:
        raise UnsupportedTargetError(
            "analytic kernel range requires a Fock-diagonal target"
        )
    d = np.diag(target.matrix)
    if np.any(np.abs(np.imag(d)) > 0):
        raise UnsupportedTargetError("diagonal target weights must be real")
    entries = target.diagonal_entries()
    if not entries:
        raise DomainError("target operator is zero")
    return entries


def kernel_range(n_or_operator, p: int, eta: float) -> float:
    """Range of the (scaled) diagonal kernel over the complex plane.

    For an integer n this is the scaled quantity
    R_n^{(p)} = range of eta^{n+1} g_{n,n}^{(p)}, the constant entering
    the Hoeffding exponent as 2 N lambda^2 eta^{2n+2} / R^2.  For a
    diagonal TargetOperator it is the raw range of the combined kernel
    sum_k a_k g_{k,k}^{(p)}, which enters as 2 N lambda^2 / R_raw^2.
    """
    _check_eta(eta)
    if isinstance(n_or_operator, (int, np.integer)):
        n = int(n_or_operator)
        w = _diag_weights([(n, 1.0)], p, eta) * eta ** (n + 1)
        return _radial_range(w, eta)
    entries = _diagonal_entries_checked(n_or_operator)
    return _radial_range(_diag_weights(entries, p, eta), eta)


# ---------------------------------------------------------------------------
# Configurations and estimates
# ---------------------------------------------------------------------------

HOEFFDING = "hoeffding"
CLT = "clt"


@dataclass(frozen=True)
class EstimatorConfig:
    """Target operator plus the free protocol parameters (p, eta, eps, delta)."""

    target: TargetOperator
    p: int
    eta: float
    epsilon: float
    delta: float | None = 0.05
    bound_method: str = HOEFFDING

    def __post_init__(self):
        _check_eta(self.eta)
        if self.p < 1:
            raise DomainError("p must be a positive integer")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise DomainError("delta must lie in (0, 1)")
        if self.bound_method not in (HOEFFDING, CLT):
            raise DomainError(f"unknown bound method {self.bound_method!r}")
        # the p_n condition must be satisfiable for every diagonal index
        for k, _ in self.target.diagonal_entries():
            pn_threshold(k, self.p, self.eta)

    @property
    def is_diagonal(self) -> bool:
        return self.target.is_diagonal

    def pn_by_index(self) -> dict:
        return {
            k: pn_threshold(k, self.p, self.eta)
            for k, _ in self.target.diagonal_entries()
        }

    def bias(self) -> float:
        """Half-width bias bound: weighted sum over diagonal support.

        For targets with off-diagonal support only the diagonal part is
        covered by the analytic bound; such targets are restricted to the
        CLT method and flagged non-analytic.
        """
        return sum(
            abs(a) * bias_bound(k, self.p, self.eta)
            for k, a in self.target.diagonal_entries()
        )

    def lam(self) -> float:
        return self.epsilon - self.bias()


@dataclass(frozen=True)
class ConfidenceEstimate:
    """Point estimate with half-width, confidence, and bound provenance."""

    value: complex | float
    half_width: float
    confidence: float
    n_samples: int
    method: str
    bias_bound: float
    lam: float
    kernel_range: float | None = None
    sigma_hat: float | None = None
    p: int = 1
    eta: float = 0.0
    p_n: dict = field(default_factory=dict)

    @property
    def lower_bound(self) -> float:
        return float(np.real(self.value)) - self.half_width

    def to_report_dict(self) -> dict:
        v = self.value
        return {
            "value": [v.real, v.imag] if isinstance(v, complex) else float(v),
            "half_width": self.half_width,
            "confidence": self.confidence,
            "N": self.n_samples,
            "method": self.method,
            "p": self.p,
            "eta": self.eta,
            "p_n": {str(k): v for k, v in self.p_n.items()},
            "bias_bound": self.bias_bound,
            "lambda": self.lam,
            "kernel_range": self.kernel_range,
        }


def kernel_values(batch_samples: np.ndarray, config: EstimatorConfig) -> np.ndarray:
    """Per-sample kernel values; real for diagonal targets.

    Diagonal targets include the half-bias recentering constant, i.e.
    the values are those of the recentered kernel h.
    """
    z = np.asarray(batch_samples, dtype=complex)
    if config.is_diagonal:
        entries = _diagonal_entries_checked(config.target)
        w = _diag_weights(entries, config.p, config.eta)
        x = np.abs(z) ** 2 / config.eta
        offset = 0.5 * (-1) ** config.p * sum(
            a * _bias_full(k, config.p, config.eta) for k, a in entries
        )
        return _radial_eval(w, config.eta, x) + offset
    vals = np.zeros(z.shape, dtype=complex)
    for k, l in config.target.support_indices():
        vals += config.target.matrix[k, l] * _vector_g(k, l, config.p, z, config.eta)
    return vals


def _vector_g(k: int, l: int, p: int, z: np.ndarray, eta: float) -> np.ndarray:
    """Vectorized g_{k,l}^{(p)} for arbitrary (k, l)."""
    w = z / math.sqrt(eta)
    x = np.abs(w) ** 2
    gauss = np.exp((1.0 - 1.0 / eta) * np.abs(z) ** 2)
    total = np.zeros(z.shape, dtype=complex)
    for j in range(p):
        kk, ll = k + j, l + j
        q, big = (kk, ll) if kk <= ll else (ll, kk)
        # laguerre2d(kk, ll, w): w^{ll-q} for kk <= ll, else conj(w)^{kk-q}
        lag = specfun.laguerre_assoc(q, big - q, x)
        pref = math.exp(0.5 * (specfun.log_factorial(q) - specfun.log_factorial(big)))
        if big > q:
            ang = w ** (big - q) if kk <= ll else np.conj(w) ** (big - q)
        else:
            ang = np.ones_like(w)
        l2d = (-1.0) ** q * pref * ang * lag
        wt = math.exp(
            j * math.log(eta)
            + 0.5 * (specfun.log_binomial(kk, k) + specfun.log_binomial(ll, l))
        )
        total += (-1) ** j * wt * l2d / eta ** (1.0 + (kk + ll) / 2.0)
    return total * gauss


def _chunked_mean(values: np.ndarray):
    """Deterministic mean via fixed-size chunks and exact fsum of totals."""
    n = values.size
    if np.iscomplexobj(values):
        re = _chunked_mean(values.real)
        im = _chunked_mean(values.imag)
        return complex(re, im)
    tot = math.fsum(
        float(np.sum(values[i : i + _CHUNK])) for i in range(0, n, _CHUNK)
    )
    return tot / n


def required_samples(config: EstimatorConfig) -> int:
    """Samples needed so the Hoeffding failure probability is <= delta."""
    if config.delta is None:
        raise DomainError("required_samples needs a target delta")
    lam = config.lam()
    if lam <= 0:
        raise InfeasiblePrecisionError(
            f"epsilon={config.epsilon} is not larger than the bias bound "
            f"{config.bias():.6g}; smallest feasible epsilon exceeds that bound",
            min_epsilon=config.bias(),
        )
    r = kernel_range(config.target, config.p, config.eta)
    return int(math.ceil(math.log(2.0 / config.delta) * r * r / (2.0 * lam * lam)))


def achieved_delta(config: EstimatorConfig, n_samples: int) -> float:
    """Hoeffding failure probability at the given sample count."""
    lam = config.lam()
    if lam <= 0:
        raise InfeasiblePrecisionError(
            f"epsilon={config.epsilon} is not larger than the bias bound "
            f"{config.bias():.6g}",
            min_epsilon=config.bias(),
        )
    r = kernel_range(config.target, config.p, config.eta)
    return min(1.0, 2.0 * math.exp(-2.0 * n_samples * lam * lam / (r * r)))


def clt_required_samples(sigma_hat: float, epsilon: float, delta: float, bias: float) -> int:
    """CLT sizing: N with 1 - erf(lam sqrt(N / 2 sigma^2)) <= delta."""
    lam = epsilon - bias
    if lam <= 0:
        raise InfeasiblePrecisionError(
            f"epsilon={epsilon} is not larger than the bias bound {bias:.6g}",
            min_epsilon=bias,
        )
    u = float(erfinv(1.0 - delta))
    return int(math.ceil(2.0 * sigma_hat**2 * (u / lam) ** 2))


def estimate(batch, config: EstimatorConfig) -> ConfidenceEstimate:
    """Mean-kernel estimate of Tr(A rho) with a confidence half-width.

    Hoeffding method (diagonal targets): fully analytic.  With
    config.delta set, the batch must contain at least required_samples()
    outcomes and the reported confidence is 1 - delta at half-width
    epsilon; with delta=None the achieved failure probability at the
    batch size is reported instead.  CLT method: half-width epsilon at
    confidence 1 - (1 - erf(lam sqrt(N / 2 sigma_hat^2))), where
    sigma_hat is the sample standard deviation of the kernel values;
    tighter but not analytic (the true variance is replaced by its
    estimate), and the only method available for non-diagonal targets.
    """
    if hasattr(batch, "effective_samples"):
        samples = batch.effective_samples()
    else:
        samples = np.asarray(batch)
    n = samples.size
    if n == 0:
        raise DomainError("cannot estimate from an empty batch")
    lam = config.lam()
    if lam <= 0:
        raise InfeasiblePrecisionError(
            f"epsilon={config.epsilon} is not larger than the bias bound "
            f"{config.bias():.6g}; no lambda is left for concentration",
            min_epsilon=config.bias(),
        )
    values = kernel_values(samples, config)
    mean = _chunked_mean(values)
    common = dict(
        n_samples=int(n),
        bias_bound=config.bias(),
        lam=lam,
        p=config.p,
        eta=config.eta,
        p_n=config.pn_by_index(),
    )
    if config.bound_method == HOEFFDING:
        if not config.is_diagonal:
            raise UnsupportedTargetError(
                "Hoeffding bounds cover Fock-diagonal targets only; use the CLT method"
            )
        r = kernel_range(config.target, config.p, config.eta)
        if config.delta is not None:
            need = int(math.ceil(math.log(2.0 / config.delta) * r * r / (2.0 * lam * lam)))
            if n < need:
                raise InsufficientSamplesError(
                    f"batch has {n} samples but (epsilon={config.epsilon}, "
                    f"delta={config.delta}) requires N >= {need}",
                    required_n=need,
                )
            delta = config.delta
        else:
            delta = min(1.0, 2.0 * math.exp(-2.0 * n * lam * lam / (r * r)))
        return ConfidenceEstimate(
            value=float(np.real(mean)),
            half_width=config.epsilon,
            confidence=1.0 - delta,
            method=HOEFFDING,
            kernel_range=r,
            **common,
        )
    # CLT branch
    if config.is_diagonal:
        sig2 = float(np.var(values))
        val = float(np.real(mean))
    else:
        sig2 = float(np.mean(np.abs(values - mean) ** 2))
        val = complex(mean)
    sig2 = max(sig2, 1e-300)
    delta_clt = 1.0 - float(erf(lam * math.sqrt(n / (2.0 * sig2))))
    return ConfidenceEstimate(
        value=val,
        half_width=config.epsilon,
        confidence=1.0 - delta_clt,
        method=CLT,
        sigma_hat=math.sqrt(sig2),
        **common,
    )


# ---------------------------------------------------------------------------
# Free-parameter optimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizeResult:
    config: EstimatorConfig
    required_n: int
    p_n: int
    kernel_range: float
    achieved_delta: float | None = None

    def to_report_dict(self) -> dict:
        return {
            "N": self.required_n,
            "p": self.config.p,
            "eta": self.config.eta,
            "p_n": self.p_n,
            "epsilon": self.config.epsilon,
            "delta": self.config.delta,
            "kernel_range": self.kernel_range,
        }


def _objective(n: int, p: int, eta: float, epsilon: float) -> float:
    """lambda * eta^{n+1} / R_n^{(p)}; required N is proportional to J^-2."""
    lam = epsilon - bias_bound(n, p, eta)
    if lam <= 0:
        return 0.0
    r = kernel_range(n, p, eta)
    return lam * eta ** (n + 1) / r


def optimize_params(
    n: int,
    epsilon: float,
    delta: float,
    n_samples_budget: int | None = None,
    p_max: int = 8,
    eta_grid_size: int = 200,
) -> OptimizeResult:
    """Free-parameter optimization for a target Fock state |n>.

    For each p = 1..p_max the figure of merit J = lambda eta^{n+1} / R is
    maximized over eta (log grid seed + golden-section refinement; the
    p_n jumps make J piecewise smooth, so the grid isolates basins), then
    the p minimizing the required N is selected, preferring the smaller p
    when two agree within 1%.  Minimizing N at fixed (epsilon, delta) and
    minimizing the failure probability at a fixed budget share the same
    optimizer, so both modes return the same (p, eta).
    """
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
        raise DomainError("epsilon and delta must lie in (0, 1)")
    etas = np.exp(np.linspace(math.log(1e-3), math.log(1.0 - 1e-3), eta_grid_size))
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    best = None  # (J, p, eta)
    per_p = []
    for p in range(1, p_max + 1):
        js = np.array([_objective(n, p, e, epsilon) for e in etas])
        i = int(np.argmax(js))
        if js[i] <= 0:
            per_p.append((p, None, 0.0))
            continue
        a = etas[max(i - 1, 0)]
        b = etas[min(i + 1, etas.size - 1)]
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1 = _objective(n, p, x1, epsilon)
        f2 = _objective(n, p, x2, epsilon)
        for _ in range(80):
            if f1 >= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = _objective(n, p, x1, epsilon)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = _objective(n, p, x2, epsilon)
            if b - a < 1e-10:
                break
        if f1 >= f2:
            eta_p, j_p = x1, f1
        else:
            eta_p, j_p = x2, f2
        if j_p < js[i]:
            eta_p, j_p = float(etas[i]), float(js[i])
        per_p.append((p, float(eta_p), float(j_p)))
    feasible = [(p, e, j) for p, e, j in per_p if e is not None and j > 0]
    if not feasible:
        raise InfeasiblePrecisionError(
            f"no (p, eta) with p <= {p_max} makes epsilon={epsilon} feasible "
            f"for target Fock {n}",
            p_max=p_max,
        )
    log_term = math.log(2.0 / delta)
    ns = [(p, e, j, log_term / (2.0 * j * j)) for p, e, j in feasible]
    n_min = min(v[3] for v in ns)
    p_sel, eta_sel, j_sel, _ = min(
        (v for v in ns if v[3] <= 1.01 * n_min), key=lambda v: v[0]
    )
    target = TargetOperator.fock_projector(n)
    config = EstimatorConfig(
        target=target,
        p=p_sel,
        eta=eta_sel,
        epsilon=epsilon,
        delta=delta,
        bound_method=HOEFFDING,
    )
    r = kernel_range(n, p_sel, eta_sel)
    req = required_samples(config)
    ach = None
    if n_samples_budget is not None:
        ach = min(1.0, 2.0 * math.exp(-2.0 * n_samples_budget * j_sel * j_sel))
    return OptimizeResult(
        config=config,
        required_n=req,
        p_n=pn_threshold(n, p_sel, eta_sel),
        kernel_range=r,
        achieved_delta=ach,
    )
