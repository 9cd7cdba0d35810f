# integration_test.py

"""
Integration run of the laboratory modules.

Runs a short chain of inexpensive presets (rate calculus with a coarse
measured α chain, lower half-plane, closed-orbit pressure) into a temporary
directory and builds the report, printing the assertion verdicts of every stage.
"""

import os
import sys
import tempfile

sys.path.append("src")

from src import emit_report, load_config, run_preset  # noqa: E402

CHAIN = ("rate", "lower-half-plane", "pressure")


def main():
    """
    Run the preset chain and the report over its manifests.
    """
    print("=" * 60)
    print("INTEGRAČNÍ BĚH LABORATOŘE REZOLVENTY")
    print("=" * 60)

    root = tempfile.mkdtemp(prefix="resolvent_lab_")
    print(f"Výstupní adresář: {root}")
    print()

    manifests = []
    try:
        for i, name in enumerate(CHAIN, 1):
            print(f"{i}. PRESET {name.upper()}")
            print("-" * 30)
            overrides = {"output_dir": os.path.join(root, name),
                         "resolution": {"min_points": 128, "max_points": 512}}
            if name == "lower-half-plane":
                overrides["options"] = {"samples": 5}
            if name == "rate":
                overrides["h_list"] = [0.5, 0.29730177875068026, 0.17677669529663687,
                                       0.10511205190671431, 0.0625]
                overrides["resolution"] = {"points_per_h": 8.0, "min_points": 64,
                                           "max_points": 256}
            config = load_config(name, overrides=overrides)
            manifest = run_preset(name, config)
            manifests.append(manifest)
            for assertion in manifest.assertions:
                status = "✓" if assertion.passed else "✗"
                print(f"  {status} {assertion.name}: {assertion.fitted} "
                      f"(předpověď {assertion.predicted})")
            print()

        files = emit_report(manifests, root)
        print("ZPRÁVA")
        print("-" * 30)
        for path in files.as_list():
            print(f"  {path}")

        print()
        print("=" * 60)
        verdict = all(m.passed for m in manifests)
        print("VŠECHNA OVĚŘENÍ PROŠLA" if verdict else "NĚKTERÁ OVĚŘENÍ SELHALA")
        print("=" * 60)
        return 0 if verdict else 1

    except Exception as e:
        print(f"CHYBA PŘI VÝPOČTU: {e}")
        import traceback

        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
