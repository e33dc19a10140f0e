# %% [markdown]
# # Brownian bridges
#
# An insider knows where the driving noise ends up at the horizon.  Given
# that knowledge the noise is no longer a Brownian motion but a bridge pinned
# at `B_T = b`.  Two samplers are available and they share one RNG contract:
# path `i` always draws from stream `(seed, i)`.

# %%

from _common import OUT, pyplot
from insiderlab.paths import BridgeSpec, TimeGrid, bridge_cov, bridge_mean, sample_paths

grid = TimeGrid(1.0, 64)
pinned_at_zero = sample_paths(grid, 10, seed=1, spec=BridgeSpec(0.0, 1.0))
print("terminal values:", pinned_at_zero[:, -1])

# %% [markdown]
# Both constructions draw the same law.  A quick moment check at t = 0.5:

# %%
spec = BridgeSpec(1.0, 1.0)
for method in ("sequential", "brownian"):
    x = sample_paths(grid, 50_000, seed=2, spec=spec, method=method)[:, 32]
    print(f"{method:>10}: mean {x.mean():.4f} (exact {bridge_mean(0.5, spec):.4f}), "
          f"var {x.var(ddof=1):.4f} (exact {bridge_cov(0.5, 0.5, spec):.4f})")

# %%
plt = pyplot()
if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(grid.times, pinned_at_zero.T, lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("B_t")
    ax.set_title("Ten bridges ending in zero")
    fig.tight_layout()
    fig.savefig(OUT / "bridges.png", dpi=120)
    print("wrote", OUT / "bridges.png")
