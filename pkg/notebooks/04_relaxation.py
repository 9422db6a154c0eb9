# %% [markdown]
# # Numerical relaxation
#
# The relaxer minimizes a grid version of the energy.  It uses cell-centred
# bilinear gradients and an isotropic Huber total variation of the gradient.
# Boundary nodes are held at zero, which is the austenite boundary condition.
# Warm starts from the constructions bound the result from above.

# %%
import numpy as np

from martenscale.geometry import Polygon
from martenscale.microstructure import exact_energy, laminate, star_block
from martenscale.compatibility import austenite_normals_linear
from martenscale.relaxer import (Grid, RelaxConfig, dirichlet_nodes, discrete_energy, interpolate,
                                 minimize, zero_field)
from martenscale.scaling import compatible_triangle
from martenscale.wells import hex_rhombic_wells

W = hex_rhombic_wells()

# %% [markdown]
# Discretization check on a laminate: first-order convergence of both terms.

# %%
n = austenite_normals_linear(W.linear[1]).directions[0]
f = laminate(2, n, 0.25, 0.5, (0, 0, 1, 1), W)
E = exact_energy(f, W)
for N in (32, 64, 128):
    D = discrete_energy(interpolate(f, Grid.box(0, 0, 1, 1, N)), W)
    print(f"{N:4d}^2: elastic {D.elastic:.4f} (exact {E.elastic:.4f})  surface {D.surface:.3f} "
          f"(exact {E.surface:.3f})")

# %% [markdown]
# Relaxation on the compatible triangle with the star block as a warm start.

# %%
dom = compatible_triangle()
g = Grid.for_domain(dom, 48)
fixed = dirichlet_nodes(g, dom)
bc = zero_field(g, fixed)
for k in (4, 6, 8):
    eps = 2.0 ** -k
    ws = interpolate(star_block(dom.vertices, 2, W), g, outside="zero", fixed=fixed)
    ws.values[fixed] = 0.0
    res = minimize(dom, bc, W, eps, RelaxConfig(restarts=3, max_iters=15), warm_starts=[ws])
    print(f"eps=2^-{k}: zero field {discrete_energy(bc, W).total(eps):.4f}, warm start "
          f"{res.warm_totals[0]:.4f}, relaxed {res.total:.4f} ({res.flag}), restarts "
          f"{np.round(res.restart_totals, 4)}")
