"""Static SVG figures with deterministic output."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "qdavies", "svg.fonttype": "path"}
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_curves(res, path):
    """Mean trace distance against time, one line per size, with a std band."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for i, size in enumerate(res.sizes):
            m, s = res.mean[i], res.std[i]
            line, = ax.plot(res.times, m, label=f"N = {res.n_sites[i]}")
            ax.fill_between(res.times, m - s, m + s, color=line.get_color(), alpha=0.2, lw=0)
        ax.set_xlabel("t")
        ax.set_ylabel(r"$\|\rho_D(t) - \rho_R(t)\|_1$")
        ax.set_title(res.config.name)
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_max_vs_size(res, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.0, 3.2))
        ax.errorbar(res.n_sites, res.max_mean, yerr=res.std_at_max, marker="o", capsize=3)
        ax.set_xlabel("N")
        ax.set_ylabel("max mean trace distance")
        ax.set_title(res.config.name)
        fig.tight_layout()
        return _save(fig, path)


def plot_trajectory(traj, path):
    """Populations (diagonal entries) of a stored trajectory."""
    occ = traj.occupations()
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for i in range(occ.shape[1]):
            ax.plot(traj.times, occ[:, i], lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel(f"population ({traj.basis} basis)")
        ax.set_title(f"{traj.generator_kind}, {traj.sector.value}")
        fig.tight_layout()
        return _save(fig, path)


def plot_scaling(table, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        ax.loglog(table.sizes, table.secular, "o-", label="secular")
        ax.loglog(table.sizes, table.nonsecular, "s-", label="non-secular RMS")
        ax.set_xlabel("N")
        ax.set_title(table.family)
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)
