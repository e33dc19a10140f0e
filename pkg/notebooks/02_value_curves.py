# %% [markdown]
# # Values against the terminal signal
#
# With mu = 0.03, r = 0.02, sigma = 0.3 and T = 1 the honest trader earns a
# fixed amount, while both insiders' values depend on `b`.  Between the
# breakpoints `-theta T` and `-theta T + sigma T` the Skorokhod insider is
# always at least as well off as the forward insider.

# %%
import numpy as np

from _common import OUT, pyplot
from insiderlab.strategies import MarketParams
from insiderlab.valuation import SignalDistribution, unconditional_forward_quadrature, unconditional_skorokhod, value_curve

p = MarketParams(0.03, 0.02, 0.3, 1.0)
lo, hi = -p.theta * p.T, -p.theta * p.T + p.sigma * p.T
table = value_curve(p, np.linspace(lo, hi, 101))
table.to_csv(OUT / "value_curve.csv")
print("skorokhod >= forward everywhere:", bool(np.all(table.v_skorokhod >= table.v_forward)))

# %% [markdown]
# Averaging over `b ~ N(0, 1)`: the Skorokhod value has a closed form; the
# forward one is integrated numerically.  The published erf expression for the
# forward case is shown beside the integral because the two disagree.

# %%
d = SignalDistribution(0.0, 1.0)
fw = unconditional_forward_quadrature(p, d)
print(f"E[V_sk] = {unconditional_skorokhod(p, d):.6f}")
print(f"E[V_fw] = {fw.quadrature:.6f} by quadrature, {fw.closed_form:.6f} closed form, "
      f"{fw.printed:.6f} from the printed expression")

# %%
plt = pyplot()
if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for col, label in [("v_riskfree", "risk-free"), ("v_honest", "honest"),
                       ("v_forward", "forward"), ("v_skorokhod", "Skorokhod")]:
        ax.plot(table.b, getattr(table, col), label=label)
    ax.set_xlabel("b")
    ax.set_ylabel("value")
    ax.legend()
    fig.tight_layout()
    fig.savefig(OUT / "value_curve.png", dpi=120)
