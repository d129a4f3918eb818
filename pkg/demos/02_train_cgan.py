"""
Training a cGAN on an AR(1) series
==================================

The generator sees the last p returns plus noise and proposes the next return.
Snapshots are scored every ``snap`` epochs by their teacher-forced RMSE and the
best one is kept. Recursive sampling then produces whole synthetic paths whose
autocorrelation can be held against the truth.
"""

import numpy as np

from cgan_strategies import CganConfig, acf, sample_path, train_and_select

rng = np.random.default_rng(1)
phi, T = 0.8, 2000
x = np.zeros(T + 500)
for t in range(1, T + 500):
    x[t] = phi * x[t - 1] + 0.01 * rng.standard_normal()
x = x[500:]

cfg = CganConfig.for_size("medium", p=5, noise_dim=252, batch_size=252, epochs=2000, snap=200,
                          eval_samples=50, learning_rate=0.05)
model = train_and_select(x, cfg, seed=0)

print("epoch   rmse")
for epoch, v in model.rmse_curve:
    mark = " <- kept" if epoch == model.selected.epoch else ""
    print(f"{epoch:5d}  {v:.5f}{mark}")

# D(real) and D(fake) near 0.5 mean the discriminator can no longer tell them apart
last = model.history[-1]
print(f"final D(real) {last['d_real']:.3f}  D(fake) {last['d_fake']:.3f}")

paths = np.array([sample_path(model, x, "recursive", seed=k) for k in range(20)])
mean_acf = np.mean([acf(p, 10) for p in paths], axis=0)
print("lag  true   real   cGAN")
real_acf = acf(x, 10)
for k in range(1, 11):
    print(f"{k:3d}  {phi**k:.3f}  {real_acf[k]:.3f}  {mean_acf[k]:.3f}")
print(f"path std {paths.std():.4f} vs data std {x.std():.4f}")
