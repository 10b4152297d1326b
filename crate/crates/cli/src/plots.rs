//! Generated matplotlib scripts. They read the CSVs next to them and save PNGs.

const LOADER: &str = r#"import csv
import os
import sys

import matplotlib

if "--show" not in sys.argv:
    matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                cols[name].append(float(value))
    return cols
"#;

/// States with estimation errors, then input with the gain staircase.
pub fn run_script(title: &str, n: usize) -> String {
    format!(
        r#"{LOADER}

N = {n}
TITLE = {title:?}
data = load(os.path.join(HERE, "trajectory.csv"))
t = data["t"]

fig, (ax_x, ax_e) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
for i in range(1, N + 1):
    ax_x.plot(t, data[f"x{{i}}"], label=f"$x_{{i}}$")
    err = [a - b for a, b in zip(data[f"x{{i}}"], data[f"xhat{{i}}"])]
    ax_e.plot(t, err, label=f"$x_{{i}} - \\hat{{{{x}}}}_{{i}}$")
ax_x.set_ylabel("states")
ax_e.set_ylabel("estimation errors")
ax_e.set_xlabel("t (s)")
for ax in (ax_x, ax_e):
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
fig.suptitle(TITLE)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "states.png"), dpi=150)

fig, (ax_u, ax_r) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
ax_u.plot(t, data["u"], color="tab:blue")
ax_u.set_ylabel("u")
ax_r.step(t, data["r"], where="post", color="tab:red")
ax_r.set_ylabel("r")
ax_r.set_xlabel("t (s)")
for ax in (ax_u, ax_r):
    ax.grid(True, alpha=0.3)
fig.suptitle(TITLE)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "control.png"), dpi=150)

if "--show" in sys.argv:
    plt.show()
"#
    )
}

/// `x₁(t)` and `r(t)` of every case on shared axes.
pub fn overlay_script(labels: &[String]) -> String {
    let cases = labels.iter().map(|l| format!("{l:?}")).collect::<Vec<_>>().join(", ");
    format!(
        r#"{LOADER}

CASES = [{cases}]

fig, (ax_x, ax_r) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
for case in CASES:
    data = load(os.path.join(HERE, case, "trajectory.csv"))
    ax_x.plot(data["t"], data["x1"], label=case)
    ax_r.step(data["t"], data["r"], where="post", label=case)
ax_x.set_ylabel("$x_1$")
ax_r.set_ylabel("r")
ax_r.set_xlabel("t (s)")
for ax in (ax_x, ax_r):
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "overlay.png"), dpi=150)

if "--show" in sys.argv:
    plt.show()
"#
    )
}
