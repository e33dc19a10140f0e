# %% [markdown]
# # Daily backtest of the three traders
#
# The bundled series is synthetic.  Parameters are estimated from the whole
# series, the insider's `b` is implied from the last price of the trading
# window, and each trader rebalances daily.

# %%
from pathlib import Path

from _common import OUT, pyplot
from insiderlab.market_data import backtest, estimate_params, load_csv

data = Path(__file__).resolve().parents[1] / "src" / "insiderlab" / "data"
series = load_csv(data / "synthetic_prices.csv")
est = estimate_params(series)
print(est.to_dict())

res = backtest(series, est, horizon=63, start=200)
res.write(OUT / "backtest")
for name, path in res.paths.items():
    print(f"{name:>9}: pi {path.pi[0]:.3f}, terminal wealth {path.wealth[-1]:.5f}")
print(f"implied b {res.implied_b:.4f}; closed-form Skorokhod wealth {res.skorokhod_closed_form:.5f}")

# %%
plt = pyplot()
if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for name, path in res.paths.items():
        ax.plot(path.dates, path.wealth, label=name)
    ax.legend()
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(OUT / "backtest.png", dpi=120)
