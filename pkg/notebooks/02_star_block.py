# %% [markdown]
# # The self-similar star block
#
# An equilateral triangle whose edges are austenite compatible can be filled
# with nested rings of variant cells.  Every ring cell is stress free.  The
# innermost core carries a rotation and costs twice its area.  Successive
# rings shrink by the factor rho = 7 - 4 sqrt(3).

# %%
import math

import numpy as np

from martenscale.microstructure import (check_continuity, elastic_per_cell, exact_energy,
                                        orientation_search, scale_ratio, star_block)
from martenscale.scaling import compatible_triangle
from martenscale.wells import hex_rhombic_wells

W = hex_rhombic_wells()
T = compatible_triangle().vertices
print("scale ratio rho =", scale_ratio(), " 7 - 4 sqrt 3 =", 7 - 4 * math.sqrt(3))
print("orientations (first edge angle mod 60):", orientation_search())

# %%
rows = []
for N in range(1, 8):
    f = star_block(T, N, W)
    rep = check_continuity(f)
    E = exact_energy(f, W)
    el = elastic_per_cell(f, W)
    rows.append((N, len(f.complex.cells), rep.max_trace_residual, np.sort(el)[-2], E.elastic, E.surface))
print(f"{'N':>2} {'cells':>6} {'trace res':>10} {'ring max':>10} {'elastic':>12} {'surface':>10}")
for r in rows:
    print(f"{r[0]:2d} {r[1]:6d} {r[2]:10.1e} {r[3]:10.1e} {r[4]:12.4e} {r[5]:10.6f}")

# %% [markdown]
# Surface increments form a geometric series, so the surface energy stays
# bounded as the depth grows.

# %%
S = np.array([r[5] for r in rows])
d = np.diff(S)
print("increment ratios:", np.round(d[1:] / d[:-1], 10))
print("geometric limit:", S[0] + d[0] / (1 - scale_ratio()))

# %% [markdown]
# Choosing the depth so that the core costs at most eps gives a total of
# order eps: this is the linear branch of the scaling dichotomy.

# %%
for k in range(4, 15, 2):
    eps = 2.0 ** -k
    N = next(r[0] for r in rows if r[4] <= eps)
    E = exact_energy(star_block(T, N, W), W)
    print(f"eps=2^-{k:<2d} depth {N}  total/eps = {E.total(eps) / eps:.3f}")
