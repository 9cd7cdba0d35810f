# src/visualization.py

"""
src/visualization.py

Visualization module for the damped-wave resolvent laboratory.
Draws log-log scaling plots of resolvent norms, energy decay traces, decay
profiles F(t) with their energy bounds, and the warp/profile geometry.
"""

import logging
import os
from typing import Dict, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)


class LabVisualization:
    """
    Handles all plotting for the laboratory.

    Every plot method takes the target path and returns it on success or None
    when the figure could not be produced; a failed figure never stops a run.

    Attributes:
        figure_size (tuple): Default figure size for plots
        dpi (int): Resolution for saved figures
        output_dir (str): Directory for saving visualizations
    """

    def __init__(
        self,
        output_dir: str = "output",
        figure_size: Tuple[int, int] = (8, 6),
        dpi: int = 150,
    ):
        """
        Initialize the visualization manager.

        Args:
            output_dir: Directory path for saving visualization files
            figure_size: Default size for matplotlib figures (width, height)
            dpi: Resolution for saved images
        """
        self.output_dir = output_dir
        self.figure_size = figure_size
        self.dpi = dpi

        os.makedirs(output_dir, exist_ok=True)

        plt.style.use("default")
        plt.rcParams["font.size"] = 10
        plt.rcParams["axes.grid"] = True
        plt.rcParams["grid.alpha"] = 0.3
        # byte-stable PNG output
        plt.rcParams["svg.hashsalt"] = "resolvent-lab"

    def _save(self, fig, path: str) -> str:
        fig.tight_layout()
        fig.savefig(path, format="png", dpi=self.dpi, metadata={"Software": None})
        plt.close(fig)
        return path

    def plot_scaling(self, table: pd.DataFrame, fit, path: str) -> Optional[str]:
        """
        Log-log plot of the global norm against h with the fitted law.

        Args:
            table: Columns h and norm
            fit: ScalingFit of the same samples
            path: Target PNG path

        Returns:
            The path, or None on failure
        """
        try:
            fig, ax = plt.subplots(figsize=self.figure_size)
            h = table["h"].to_numpy(dtype=float)
            norm = table["norm"].to_numpy(dtype=float)
            ax.loglog(h, norm, "o", color="darkblue", label="||R(z)||")

            grid = np.geomspace(h.min(), h.max(), 100)
            power = fit.coefficients["power"] * grid**fit.exponent
            ax.loglog(grid, power, "r-", label=f"C h^{fit.exponent:.3f}")
            if np.isfinite(fit.residuals.get("log", np.inf)):
                log_law = fit.coefficients["log"] * np.abs(np.log(grid)) / grid
                ax.loglog(grid, log_law, "g--", label="C |log h|/h")

            ax.set_xlabel("h")
            ax.set_ylabel("Norma rezolventy")
            ax.set_title(f"Škálování normy rezolventy ({table['kind'].iloc[0]})")
            ax.legend()
            return self._save(fig, path)
        except Exception as exc:
            logger.error("Chyba při vytváření grafu škálování: %s", exc)
            plt.close("all")
            return None

    def plot_energy_traces(self, traces: Dict[str, pd.DataFrame],
                           path: str) -> Optional[str]:
        """Semilog plot of E(t)/E(0) for each labelled trace."""
        try:
            fig, ax = plt.subplots(figsize=self.figure_size)
            for label, trace in traces.items():
                E = trace["E"].to_numpy(dtype=float)
                ax.semilogy(trace["t"], E / E[0], linewidth=1.5, label=label)
            ax.set_xlabel("t")
            ax.set_ylabel("E(t) / E(0)")
            ax.set_title("Útlum energie")
            ax.legend()
            return self._save(fig, path)
        except Exception as exc:
            logger.error("Chyba při vytváření grafu energie: %s", exc)
            plt.close("all")
            return None

    def plot_decay_profiles(self, models: Sequence, path: str) -> Optional[str]:
        """
        log F(t) and the energy bound F(t)^{-k} of decay models on log axes.
        """
        try:
            fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(2 * self.figure_size[0],
                                                          self.figure_size[1]))
            for model in models:
                ax1.loglog(model.t, np.maximum(model.log_F, 1e-300), label=model.label)
                ax2.loglog(model.t, model.energy_bound(float(model.k)), label=model.label)
            ax1.set_xlabel("t")
            ax1.set_ylabel("log F(t)")
            ax1.set_title("Profil F")
            ax2.set_xlabel("t")
            ax2.set_ylabel("min(1, F(t)^-k)")
            ax2.set_title("Odhad energie")
            ax1.legend()
            ax2.legend()
            return self._save(fig, path)
        except Exception as exc:
            logger.error("Chyba při vytváření grafu profilů útlumu: %s", exc)
            plt.close("all")
            return None

    def plot_geometry(self, table: pd.DataFrame, path: str) -> Optional[str]:
        """Warp A(x) and the coefficient profiles over one cell."""
        try:
            fig, (ax1, ax2) = plt.subplots(2, 1, figsize=self.figure_size, sharex=True)
            ax1.plot(table["x"], table["A"], "k-", linewidth=2)
            ax1.set_ylabel("A(x)")
            ax1.set_title("Deformační funkce")
            for name in ("a", "W", "chi", "B1", "phi"):
                if name in table:
                    ax2.plot(table["x"], table[name], linewidth=1.5, label=name)
            ax2.set_xlabel("x")
            ax2.set_ylabel("Profil")
            ax2.legend()
            return self._save(fig, path)
        except Exception as exc:
            logger.error("Chyba při vytváření grafu geometrie: %s", exc)
            plt.close("all")
            return None
