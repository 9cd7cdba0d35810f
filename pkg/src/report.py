# src/report.py

"""
src/report.py

Reporting module for the damped-wave resolvent laboratory.
Collects the run manifests of one or more presets and writes a deterministic
text report (one table per preset with predicted law, fitted law, tolerance
and verdict), a flat CSV of all assertions and an optional Excel workbook.
"""

import glob
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import pandas as pd

try:
    from .experiment import RunManifest
except ImportError:
    from experiment import RunManifest

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["preset", "assertion", "predicted", "fitted", "tolerance", "verdict"]


@dataclass
class ReportFiles:
    """Paths of the files written by one report."""

    text: str
    csv: str
    excel: Optional[str] = None

    def as_list(self) -> List[str]:
        return [p for p in (self.text, self.csv, self.excel) if p]


def collect_manifests(output_dir: str) -> List[RunManifest]:
    """
    Find manifest.json in output_dir and its direct subdirectories.

    Manifests are returned sorted by preset name then path so the report does
    not depend on directory listing order.
    """
    paths = glob.glob(os.path.join(output_dir, "manifest.json"))
    paths += glob.glob(os.path.join(output_dir, "*", "manifest.json"))
    found = []
    for path in sorted(paths):
        try:
            found.append((path, RunManifest.load(path)))
        except (OSError, ValueError, KeyError) as exc:
            logger.warning("Manifest %s nelze načíst: %s", path, exc)
    found.sort(key=lambda item: (item[1].preset, item[0]))
    return [manifest for _, manifest in found]


class ReportGenerator:
    """
    Report generator for preset runs.

    Output carries no timestamps; runs are identified by their config hash,
    so repeated reports over the same manifests are byte-identical.

    Attributes:
        output_dir (str): Directory for saving report files
    """

    def __init__(self, output_dir: str = "output"):
        """
        Initialize report generator.

        Args:
            output_dir: Directory path for saving report files
        """
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    @staticmethod
    def rows(manifests: Sequence[RunManifest]) -> pd.DataFrame:
        """One row per assertion across all manifests."""
        records = []
        for manifest in manifests:
            for a in manifest.assertions:
                records.append({
                    "preset": manifest.preset,
                    "assertion": a.name,
                    "predicted": a.predicted,
                    "fitted": a.fitted,
                    "tolerance": a.tolerance,
                    "verdict": "PASS" if a.passed else "FAIL",
                })
        return pd.DataFrame(records, columns=REPORT_COLUMNS)

    def generate_text_report(self, manifests: Sequence[RunManifest],
                             filename: str = "report.txt") -> str:
        """
        Write the text report.

        Args:
            manifests: Run manifests
            filename: Report file name

        Returns:
            Path to the generated text report file
        """
        filepath = os.path.join(self.output_dir, filename)
        with open(filepath, "w", encoding="utf-8") as f:
            f.write("=" * 80 + "\n")
            f.write("ZPRÁVA LABORATOŘE REZOLVENTY TLUMENÉ VLNOVÉ ROVNICE\n")
            f.write("=" * 80 + "\n\n")

            if not manifests:
                f.write("Nebyly vyhodnoceny žádné výsledky (no assertions evaluated)\n")
                return filepath

            for manifest in manifests:
                f.write(f"PRESET: {manifest.preset}\n")
                f.write("-" * 40 + "\n")
                f.write(f"Konfigurace (SHA-256): {manifest.config_hash}\n")
                f.write(f"Verze schématu: {manifest.schema_version}\n")
                if manifest.timings:
                    total = sum(manifest.timings.values())
                    f.write(f"Doba výpočtu: {total:.1f} s\n")
                f.write("\n")

                table = self.rows([manifest])
                if table.empty:
                    f.write("  no assertions evaluated\n\n")
                    continue
                body = table.drop(columns=["preset"]).rename(columns={
                    "assertion": "Ověření",
                    "predicted": "Předpověď",
                    "fitted": "Naměřeno",
                    "tolerance": "Tolerance",
                    "verdict": "Výsledek",
                })
                f.write(body.to_string(index=False) + "\n\n")

            table = self.rows(manifests)
            passed = int((table["verdict"] == "PASS").sum())
            f.write("=" * 80 + "\n")
            f.write(f"SOUHRN: {passed} z {len(table)} ověření prošlo\n")
        return filepath

    def generate_csv_export(self, manifests: Sequence[RunManifest],
                            filename: str = "report_rows.csv") -> str:
        """Flat CSV of every assertion."""
        filepath = os.path.join(self.output_dir, filename)
        self.rows(manifests).to_csv(filepath, index=False)
        return filepath

    def generate_excel_report(self, manifests: Sequence[RunManifest],
                              filename: str = "report.xlsx") -> Optional[str]:
        """
        Excel workbook with a summary sheet and one sheet per preset.

        Returns:
            Path to the workbook, or None if it could not be written
        """
        filepath = os.path.join(self.output_dir, filename)
        try:
            with pd.ExcelWriter(filepath, engine="openpyxl") as writer:
                summary = pd.DataFrame([
                    {"preset": m.preset, "config_hash": m.config_hash,
                     "assertions": len(m.assertions),
                     "passed": sum(a.passed for a in m.assertions),
                     "verdict": "PASS" if m.passed else "FAIL"}
                    for m in manifests
                ], columns=["preset", "config_hash", "assertions", "passed", "verdict"])
                summary.to_excel(writer, sheet_name="Souhrn", index=False)

                used: Dict[str, int] = {}
                for manifest in manifests:
                    # sheet names are limited to 31 characters and must be unique
                    name = manifest.preset[:28]
                    used[name] = used.get(name, 0) + 1
                    if used[name] > 1:
                        name = f"{name}_{used[name]}"
                    self.rows([manifest]).drop(columns=["preset"]).to_excel(
                        writer, sheet_name=name, index=False
                    )
        except (OSError, ValueError, ImportError) as exc:
            logger.error("Chyba při vytváření Excel zprávy: %s", exc)
            return None
        return filepath


def emit_report(manifests: Sequence[RunManifest], output_dir: str,
                excel: bool = False) -> ReportFiles:
    """
    Write report.txt, report_rows.csv and optionally report.xlsx.

    Args:
        manifests: Run manifests (an empty list yields a report stating that
            no assertions were evaluated)
        output_dir: Target directory
        excel: Also write the Excel workbook

    Returns:
        ReportFiles: Written paths
    """
    generator = ReportGenerator(output_dir)
    files = ReportFiles(
        text=generator.generate_text_report(manifests),
        csv=generator.generate_csv_export(manifests),
    )
    if excel:
        files.excel = generator.generate_excel_report(manifests)
    logger.info("Zpráva vygenerována: %d souborů", len(files.as_list()))
    return files
