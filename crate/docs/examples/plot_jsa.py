"""|J| and the leading Schmidt modes from a `tbsim simulate` output directory.

    tbsim simulate high_gain_41.json
    python plot_jsa.py out/high_gain_41 jsa.png
"""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

out = Path(sys.argv[1])
jsa = np.genfromtxt(out / "jsa.csv", delimiter=",", skip_header=1, names=True)
n = int(round(np.sqrt(len(jsa))))
nu = jsa["nu_s"][::n]
amplitude = jsa["abs"].reshape(n, n)  # rows: nu_s, columns: nu_i

modes = np.genfromtxt(out / "modes.csv", delimiter=",", skip_header=1, names=True)

fig, (a, b) = plt.subplots(1, 2, figsize=(9, 4))
a.imshow(amplitude.T, origin="lower", extent=[nu[0], nu[-1], nu[0], nu[-1]], cmap="viridis")
a.set_xlabel(r"$\nu_s$")
a.set_ylabel(r"$\nu_i$")
a.set_title("|J|")
for l in np.unique(modes["mode"]).astype(int):
    m = modes[modes["mode"] == l]
    b.plot(m["nu"], np.hypot(m["rho_s_re"], m["rho_s_im"]), label=f"mode {l}, r = {m['r'][0]:.3f}")
b.set_xlabel(r"$\nu$")
b.set_ylabel(r"$|\rho_s|$")
b.legend()
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else "jsa.png", dpi=150)
