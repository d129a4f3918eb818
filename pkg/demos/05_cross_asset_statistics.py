"""
Comparing validation schemes across assets
==========================================

With one Sharpe ratio per asset and scheme, the Friedman test asks whether any
scheme ranks differently from the rest, and Holm-corrected rank-sum tests
compare each scheme with the best one.
"""

import numpy as np

from cgan_strategies import rank_table, robust_summary, wilcoxon_rank_sum

rng = np.random.default_rng(5)
schemes = ["naive", "one_split", "kfold", "hv_block", "stat_boot", "cgan_large"]
n_assets = 60
asset_effect = rng.normal(0, 0.3, size=(n_assets, 1))
edge = np.array([-0.15, 0.0, 0.02, 0.03, 0.05, 0.12])
sharpes = asset_effect + edge + rng.normal(0, 0.25, size=(n_assets, len(schemes)))

for j, s in enumerate(schemes):
    summ = robust_summary(sharpes[:, j])
    print(f"{s:<11} median {summ['median']:+.3f}  MAD {summ['mad']:.3f}")

tab = rank_table(sharpes, schemes, alpha=0.05)
print(f"\nFriedman chi2 {tab['friedman_chi2']:.2f}, p = {tab['friedman_p']:.2e}, {tab['n_assets']} assets")
print(f"{'scheme':<11} {'avg rank':>8} {'p-value':>9} {'Holm':>7}  reject")
for row in tab["rows"]:
    if row["p_value"] is None:
        print(f"{row['method']:<11} {row['avg_rank']:>8.2f}   (best)")
    else:
        print(f"{row['method']:<11} {row['avg_rank']:>8.2f} {row['p_value']:>9.4f} "
              f"{row['holm_threshold']:>7.4f}  {row['reject']}")

print("\ncgan_large vs stat_boot rank-sum p =",
      round(wilcoxon_rank_sum(sharpes[:, 5], sharpes[:, 4]), 4))
