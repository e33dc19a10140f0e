# %% [markdown]
# # The adapted forward insider
#
# Re-solving at every instant with the running bridge value makes the
# portfolio blow up near T, and the value grows like `ln(1/eps) / 2` when
# trading stops at `T - eps`.  Monte Carlo reproduces the truncated value once
# the left-point step bias is removed.

# %%
import math

from insiderlab.paths import TimeGrid
from insiderlab.strategies import MarketParams, StrategySpec
from insiderlab.valuation import value_forward_adapted_truncated
from insiderlab.wealth import MCConfig, mc_expected_log_utility

p = MarketParams(0.03, 0.02, 0.3, 1.0)
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    v = value_forward_adapted_truncated(p, 0.0, eps)
    step = value_forward_adapted_truncated(p, 0.0, eps / 2) - v
    print(f"eps={eps:g}: V = {v:.5f}, V(eps/2) - V(eps) = {step:.5f} (ln2/2 = {math.log(2) / 2:.5f})")

# %%
spec = StrategySpec.from_name("forward-adapted")
cfg = MCConfig(20_000, 11, TimeGrid(1.0, 2000))
plain = mc_expected_log_utility(spec, p, 0.0, cfg, stop_time=0.99)
extrap = mc_expected_log_utility(spec, p, 0.0, cfg, stop_time=0.99, richardson=True)
exact = value_forward_adapted_truncated(p, 0.0, 0.01)
print(f"closed form {exact:.4f}; plain MC {plain.mean:.4f} +/- {plain.std_error:.4f}; "
      f"Richardson MC {extrap.mean:.4f} +/- {extrap.std_error:.4f}")
