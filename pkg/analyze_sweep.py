import csv
import sys
from collections import Counter


CSV_PATH = "results/sweep.csv"
THRESHOLD = 0.99


def load_sweep(path: str = CSV_PATH) -> list[dict]:
    """
    Load a sweep CSV written by `main.py sweep`.
    Numeric columns are converted; an empty fidelity cell becomes None.
    """
    rows: list[dict] = []

    with open(path, "r", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            row["R_um"] = float(row["R_um"])
            row["ratio"] = float(row["ratio"])
            row["fidelity"] = float(row["fidelity"]) if row.get("fidelity") else None
            rows.append(row)

    return rows


def best_points(rows: list[dict], top_n: int = 5) -> list[dict]:
    scored = [r for r in rows if r["fidelity"] is not None]
    return sorted(scored, key=lambda r: r["fidelity"], reverse=True)[:top_n]


def high_fidelity_region(rows: list[dict], threshold: float = THRESHOLD) -> dict | None:
    """
    Bounding box of the grid points with F >= threshold.
    Example:
        {"points": 12, "R_um": (6.1, 7.4), "ratio": (2.5, 4.0)}
    """
    inside = [r for r in rows if r["fidelity"] is not None and r["fidelity"] >= threshold]
    if not inside:
        return None

    R_values = [r["R_um"] for r in inside]
    ratios = [r["ratio"] for r in inside]
    return {
        "points": len(inside),
        "R_um": (min(R_values), max(R_values)),
        "ratio": (min(ratios), max(ratios)),
    }


def main(path: str = CSV_PATH, threshold: float = THRESHOLD) -> None:
    print("=== Sweep Analyzer ===")

    rows = load_sweep(path)
    if not rows:
        print(f"No rows found in {path}. Run `python main.py sweep` first.")
        return

    print(f"Loaded {len(rows)} point(s) from '{path}'")

    print("\n=== Status ===")
    for status, count in Counter(r["status"] for r in rows).most_common():
        print(f"{status}: {count}")

    print("\n=== Best Points ===")
    for r in best_points(rows):
        print(f"R = {r['R_um']:.3f} um, Omega_c/Omega_p = {r['ratio']:.3f}: F = {r['fidelity']:.6f}")

    print(f"\n=== Region with F >= {threshold} ===")
    region = high_fidelity_region(rows, threshold)
    if region is None:
        print("none")
    else:
        print(f"{region['points']} point(s), R in [{region['R_um'][0]:.3f}, {region['R_um'][1]:.3f}] um, "
              f"ratio in [{region['ratio'][0]:.3f}, {region['ratio'][1]:.3f}]")


if __name__ == "__main__":
    main(*sys.argv[1:2])
