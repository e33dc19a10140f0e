# %% [markdown]
# # Several assets, full and partial knowledge
#
# Closed-form portfolios are compared with a projected-gradient maximizer that
# only sees the objective.

# %%
import numpy as np

from insiderlab.multiasset import MultiAssetParams, Scheme, mapo_partial_info, mapo_pi_bridge_or_forward, mapo_value, numeric_maximize_J

sigma = np.array([[0.30, 0.05, 0.00], [0.05, 0.25, 0.02], [0.00, 0.02, 0.20]])
m = MultiAssetParams([0.05, 0.04, 0.035], 0.02, sigma, 1.0, [0.4, -0.2, 0.1])
closed = mapo_pi_bridge_or_forward(m).pi
oracle = numeric_maximize_J(m, Scheme.BRIDGE_OR_FORWARD).pi
print("closed form:", np.round(closed, 6), " oracle:", np.round(oracle, 6))
print("values:", {s.value: round(mapo_value(m, s), 5) for s in Scheme})

# %% [markdown]
# Knowing only the first asset's signal:

# %%
partial = m.with_mask([True, False, False])
for scheme in Scheme:
    pv, v = mapo_partial_info(partial, scheme)
    print(scheme.value, np.round(pv.pi, 4), round(v, 5), pv.notes)
