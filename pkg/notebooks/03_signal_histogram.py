# %% [markdown]
# # Distribution of the value when the signal is random
#
# Draw `b ~ N(e, 64)` for a 64-day horizon (mu = 0.03, sigma = 0.3, r = 0.0027
# per day) and record each insider's value of the problem.

# %%
from _common import OUT, pyplot
from insiderlab.experiments import histogram_experiment
from insiderlab.strategies import MarketParams

p = MarketParams(0.03, 0.0027, 0.3, 64.0)
results = {e: histogram_experiment(p, e, 64.0, 5000, seed=3) for e in (0.0, 0.5, 1.0)}
for e, res in results.items():
    s = res.summary()
    print(f"e={e}: mean fw {s['v_forward']['mean']:.3f} sk {s['v_skorokhod']['mean']:.3f}; "
          f"var fw {s['v_forward']['var']:.3f} sk {s['v_skorokhod']['var']:.3f}")

# %% [markdown]
# The Skorokhod mean is higher and both means rise with `e`.  Its variance is
# higher too: the indicator portfolio is all-in whenever it is in, so its
# value is linear in `b` on half the line.

# %%
plt = pyplot()
if plt is not None:
    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    for ax, (e, res) in zip(axes, results.items()):
        edges, cf, cs = res.histogram(60)
        ax.stairs(cf, edges, label="forward")
        ax.stairs(cs, edges, label="Skorokhod")
        ax.set_title(f"e = {e}")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(OUT / "signal_histogram.png", dpi=120)
