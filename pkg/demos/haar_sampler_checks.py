"""Is the two-qubit gate sampler actually Haar?

The Ginibre-QR construction is Haar by theorem; the 16-phase mesh with
uniformly sampled phases is only claimed to be. Both get the same
empirical treatment here: the |U_00|^2 marginal against the exact Haar
density 3(1-x)^2, and the single-gate frame potential against k!.
"""
import math

import numpy as np

from framepot import haar

DRAWS = 200_000

for mode in ("ginibre_qr", "phase_param"):
    report = haar.sampler_report(mode, np.random.default_rng(1), DRAWS)
    print(f"{mode} ({DRAWS} draws):")
    print(
        f"  |U00|^2 KS statistic {report.entry_ks_statistic:.4f}, "
        f"p-value {report.entry_ks_pvalue:.3g}"
    )
    sigma = (report.fp_k1_value - 1.0) / report.fp_k1_std_error
    print(
        f"  F(k=1) = {report.fp_k1_value:.4f} +- {report.fp_k1_std_error:.4f} "
        f"({sigma:+.1f} sigma from the Haar value 1)"
    )

print("\nhigher moments, Ginibre-QR (F(k) vs k!):")
rng = np.random.default_rng(2)
u = haar.sample_haar_batch(rng, DRAWS)
v = haar.sample_haar_batch(rng, DRAWS)
t2 = np.abs(np.einsum("bij,bij->b", u.conj(), v)) ** 2
for k in range(1, 7):
    vals = t2**k
    mean = vals.mean()
    se = vals.std(ddof=1) / math.sqrt(DRAWS)
    print(f"  k={k}: {mean:8.2f} +- {se:6.2f}   (k! = {math.factorial(k)})")
