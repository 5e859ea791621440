"""Squeezing parameters against sqrt(N_p) from a `tbsim sweep` table.

    tbsim sweep high_gain_41.json --from 0.1 --to 8 --points 40 --scale log --out out/sweep
    python plot_sweep.py out/sweep/sweep.csv sweep.png
"""
import sys

import matplotlib.pyplot as plt
import numpy as np

table = np.genfromtxt(sys.argv[1], delimiter=",", skip_header=1, names=True)
sqrt_np = table["sqrt_np"]

fig, ax = plt.subplots(figsize=(5, 4))
for l in range(1, 5):
    r = table[f"r_{l}"]
    (line,) = ax.plot(sqrt_np, r, label=f"$r_{l}$")
    # low-gain extrapolation from the first point
    ax.plot(sqrt_np, r[0] / sqrt_np[0] * sqrt_np, "--", color=line.get_color(), lw=0.8)
ax.set_xlabel(r"$\sqrt{N_p}$")
ax.set_ylabel("squeezing parameter")
ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else "sweep.png", dpi=150)
