"""Certifying a minimum stellar rank from a fidelity estimate.

No state of stellar rank below k can exceed a computable fidelity
ceiling with a given target; pushing an estimated fidelity lower bound
above that ceiling therefore certifies rank >= k.  The ceilings come
from a 4-parameter optimization over Gaussian unitaries; for Fock
targets |1>..|5> the rank-(k-1) ceilings are

    |1>: 0.478
    |2>: 0.381 0.557
    |3>: 0.333 0.462 0.593
    |4>: 0.301 0.409 0.501 0.612
    |5>: 0.279 0.374 0.449 0.525 0.626

This script reproduces a ceiling, then runs the full certification on a
photon-subtracted squeezed state measured in the frame of its own
preparation squeezing (unbalanced detection reverts the squeeze, so the
target is plain |1> at the detector and the ceiling is unchanged).
"""

import numpy as np

from stellarq import dhd, estimator as est, fockspace as fs, stellar

# --- a fidelity ceiling and the optimal approximating state ----------------
point = stellar.max_fidelity_rank_bounded(fs.CoreState.fock(1), 1)
print(f"Gaussian ceiling for |1>: {point.max_fidelity:.6f} "
      f"(3*sqrt(3)/(4e) = {3 * np.sqrt(3) / (4 * np.e):.6f})")
print(f"best Gaussian: r={point.optimal_params.squeeze_r:.4f}, "
      f"beta={point.optimal_params.displacement:.4f}")

profile = stellar.fidelity_profile(fs.CoreState.fock(3), 3)
stellar.profile_to_csv(profile, "/tmp/demo_profile_fock3.csv")
print("profile of |3>:", [round(p.max_fidelity, 3) for p in profile])

# --- end-to-end certification ------------------------------------------------
xi_r = fs.db_to_r(3.0)
prepared = fs.photon_subtract(fs.make_squeezed_thermal(xi_r, 0.0, 0.95, 32))
framed_target = fs.CoreState((0, 1), fs.GaussianUnitaryParams(xi_r, 0.0, 0j))
truth = fs.fidelity(prepared, framed_target)
print(f"\ntrue fidelity with S(xi)|1>: {truth:.4f}")

opt = est.optimize_params(1, 0.2, 0.05)
n_req = est.required_samples(opt.config)
batch = dhd.sample_unbalanced(prepared, -xi_r, n_req, seed=21)
res = est.estimate(batch, opt.config)
verdict = stellar.rank_witness_verdict(res, framed_target)
print(f"estimate {res.value:.3f} +- {res.half_width} at {res.confidence:.0%}, "
      f"lower bound {res.lower_bound:.3f}")
print(f"verdict: certified rank >= {verdict['certified_rank']} "
      f"(threshold {verdict['threshold_used']:.4f}, "
      f"confidence {verdict['confidence']:.0%})")
