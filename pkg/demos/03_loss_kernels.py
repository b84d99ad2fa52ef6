"""The three loss components on a registered pair.

Simulates the training-head data flow: a prediction, a larger coarsely
aligned target, a rigid transform from the registration head, and the
weighted total of reconstruction, Gram-style and equivariance terms.
Feature extraction normally comes from an encoder; here the image
channels themselves act as a one-layer feature stack.
"""

import numpy as np

from reglosslib.bench import generate_texture
from reglosslib.losses import (
    LossWeights,
    equivariance_loss,
    gram_style_loss,
    reconstruction_loss,
    rotate180,
    total_loss,
)
from reglosslib.registration import RigidTransform, apply_rigid, register_rigid

rng = np.random.default_rng(3)

# target patch (360) and the "prediction" (260), a degraded aligned view
moving = generate_texture(360, 360, "cell_blobs", rng, blob_depth=60.0, smooth=1.0) / 255.0
truth = RigidTransform(du=14, dv=-9, theta=1.0, score=0.0, metric="mse")
pred = apply_rigid(moving, truth, 260, 260)
pred = pred + rng.normal(0.0, 0.01, pred.shape)  # imperfect generator

t = register_rigid(pred, moving, "mse", overlap="full", threads=4)
print(f"head estimate: theta={t.theta} du={t.du} dv={t.dv}")

l_r = reconstruction_loss(pred, moving, t)
print(f"reconstruction loss (mean |diff| after alignment): {l_r:.5f}")

aligned = apply_rigid(moving, t, 260, 260)
l_s = gram_style_loss([aligned[None, :, :]], [pred[None, :, :]])
print(f"gram style loss (identity features): {l_s:.3e}")

# equivariance: a generator that commutes with the 180-degree rotation
# scores exactly zero; a shifted response does not
g_x = pred
g_omega_x_good = rotate180(pred)
g_omega_x_bad = np.roll(rotate180(pred), (0, 3), axis=(0, 1))
print(f"equivariance loss, commuting generator: {equivariance_loss(g_x, g_omega_x_good):.3g}")
print(f"equivariance loss, 3 px response drift: {equivariance_loss(g_x, g_omega_x_bad):.3g}")

w = LossWeights(lam=0.5, eta=0.1, style_scale=1.0e4)
l_e = equivariance_loss(g_x, g_omega_x_bad)
print(f"total = {total_loss(l_r, l_s, l_e, w):.5f}  "
      f"(lambda={w.lam}, eta={w.eta}, style scale {w.style_scale:g})")
