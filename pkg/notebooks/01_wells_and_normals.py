# %% [markdown]
# # Wells, compatibility and interface normals
#
# The hexagonal-to-rhombic transformation has three linear strain wells.
# Each pair is symmetrized rank-one connected, and each well admits two
# austenite interface normals.  Together they give six directions.

# %%
import math

import numpy as np

from martenscale.algebra2d import sym_rank_one_decompose
from martenscale.compatibility import (austenite_normals_linear, hex_rhombic_normal_set,
                                       incompatibility_constant, nonlinear_normal_set)
from martenscale.geometry import segment_at_angle
from martenscale.wells import hex_rhombic_wells, oblique_wells

W = hex_rhombic_wells()
for j, e in enumerate(W.linear, start=1):
    print(f"e{j} =\n{np.round(e, 6)}  |e|_F^2 = {np.sum(e * e):.3f}")

# %% [markdown]
# Pairwise differences decompose as symmetrized rank-one matrices.

# %%
for i in range(3):
    for j in range(i + 1, 3):
        a, n = sym_rank_one_decompose(W.linear[i] - W.linear[j])
        ang = math.degrees(math.atan2(n[1], n[0])) % 180
        print(f"e{i + 1} - e{j + 1}: normal at {ang:6.2f} deg, |a| = {np.linalg.norm(a):.4f}")

# %% [markdown]
# Austenite normals per well and their union.

# %%
for j, e in enumerate(W.linear, start=1):
    print(f"well {j}: normals at {np.round(austenite_normals_linear(e).degrees(), 6)} deg")
ns = hex_rhombic_normal_set()
print("union:", np.round(ns.degrees(), 6))

# %% [markdown]
# The incompatibility constant of a flat boundary vanishes exactly on the six
# directions and is positive elsewhere.

# %%
angles = np.arange(0, 180, 5)
d = [incompatibility_constant(segment_at_angle(math.radians(a)), W).d for a in angles]
for a, v in zip(angles, d):
    print(f"{a:4d} deg  d = {v:.4f}  {'#' * int(40 * v)}")

# %% [markdown]
# Nonlinear oblique wells: twinning with the identity gives at most eight
# (square symmetry) or twelve (hexagonal symmetry) normals.

# %%
for ngon in (4, 3):
    for a in (0.8, 0.9, 1.1, 1.25):
        print(f"n={ngon} a={a}: {len(nonlinear_normal_set(oblique_wells(ngon, a)))} normals")
