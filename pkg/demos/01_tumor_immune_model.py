"""Tumor-immune dynamics: equilibria, basins, and the untreated course.

Walks the nonlinear model with the published parameters: finds the three
equilibria (benign focus, saddle, malignant node), then integrates the
untreated system from the malignant-region initial condition (600, 0.1)
for 60 days and plots the dynamic profile together with a small phase
portrait.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from copos import STEPANOVA_TABLE1, State, find_equilibria, integrate_rk4, zero_policy

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = STEPANOVA_TABLE1

print("== equilibria of the unforced model ==")
equilibria = find_equilibria(params)
for eq in equilibria:
    lam = ", ".join(f"{l:.4f}" for l in eq.eigenvalues)
    print(f"  ({eq.point.x1:8.3f}, {eq.point.x2:6.4f})  {eq.kind:<22} eigs: {lam}")

# Untreated course from the malignant region: the tumor grows to the
# macroscopic equilibrium while the immune density collapses.
traj = integrate_rk4(params, State(600.0, 0.1), zero_policy, t_end=60.0, dt=0.01)
print("\n== untreated 60-day course from (600, 0.1) ==")
print(f"  terminal state: ({traj.states[-1, 0]:.3f}, {traj.states[-1, 1]:.4f})")

fig, axes = plt.subplots(1, 3, figsize=(14, 4))
axes[0].plot(traj.times, traj.states[:, 0])
axes[0].set_xlabel("time [days]")
axes[0].set_ylabel("tumor cells x1 [1e6]")
axes[0].set_title("untreated tumor load")
axes[1].plot(traj.times, traj.states[:, 1], color="tab:orange")
axes[1].set_xlabel("time [days]")
axes[1].set_ylabel("effector density x2")
axes[1].set_title("untreated immune response")

# phase portrait with a few trajectories and the three equilibria
ax = axes[2]
for x1_0, x2_0 in [(600, 0.1), (50, 0.5), (200, 2.0), (500, 1.5), (100, 0.2)]:
    t = integrate_rk4(params, State(x1_0, x2_0), zero_policy, t_end=120.0, dt=0.02)
    ax.plot(t.states[:, 0], t.states[:, 1], lw=0.8, color="gray")
markers = {"stable-node-benign": "go", "saddle": "ks", "stable-node-malignant": "rv"}
for eq in equilibria:
    ax.plot(eq.point.x1, eq.point.x2, markers[eq.kind], ms=8, label=eq.kind)
ax.set_xlabel("x1")
ax.set_ylabel("x2")
ax.set_title("phase portrait")
ax.legend(fontsize=7)
fig.tight_layout()
path = os.path.join(OUT, "01_model.png")
fig.savefig(path, dpi=120)
print(f"\nfigure saved to {path}")
