"""Pilot run for the shipped replica config.

Runs the bias (1 sigma) and drift (2.5 sigma) experiments with the
multi-condition bank and the single global PCA baseline, prints the
results and, with ``--write``, stores them under the ``pilot`` key of
``replica_3mode.json`` so acceptance thresholds can be traced to a run.
"""
import argparse
import json
from importlib import resources

from mpcafd.experiments import run_replica
from mpcafd.faultlab import load_plant_config, mode_separation


def pilot() -> dict:
    plant = load_plant_config("replica_3mode")
    out = {"mode_separation_sigmas": round(mode_separation(plant, "train"), 2)}
    for kind, sigmas in (("bias", 1.0), ("drift", 2.5)):
        for label, k in (("multi", None), ("single", 1)):
            rep = run_replica(kind, sigmas, k_override=k, plant=plant).report
            out[f"{kind}_{sigmas}sd_{label}"] = {
                "detection_rate": round(rep.detection_rate, 4),
                "detection_rate_total": round(rep.detection_rate_total, 4),
                "first_sustained_index": rep.first_sustained_index,
                "n_test": rep.n_test,
            }
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--write", action="store_true", help="store results in the config file")
    args = parser.parse_args()
    result = pilot()
    print(json.dumps(result, indent=2))
    if args.write:
        path = resources.files("mpcafd").joinpath("configs/replica_3mode.json")
        config = json.loads(path.read_text("utf-8"))
        config["pilot"] = result
        with open(str(path), "w", encoding="utf-8") as fh:
            json.dump(config, fh, indent=2)
            fh.write("\n")


if __name__ == "__main__":
    main()
