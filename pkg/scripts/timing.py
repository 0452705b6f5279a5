"""Training time with and without the fairness terms (best of several repeats)."""

import argparse
import time
from pathlib import Path

from eosp.data import SyntheticConfig, generate_synthetic
from eosp.graph import make_splits
from eosp.losses import FairnessConfig
from eosp.models import init_params
from eosp.train import TrainConfig, train


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--synthetic", default=Path(__file__).parent / "configs" / "biased.toml")
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    ds = generate_synthetic(SyntheticConfig.from_toml(args.synthetic))
    splits = make_splits(ds, 100, 0)
    print(f"{'model':6s} {'method':10s} {'seconds':>8s}")
    for model in ("gcn", "sage"):
        init = init_params(ds.d, encoder_kind=model, seed=0)
        times = {}
        for name, w in (("baseline", 0.0), ("eosp", 1.0)):
            best = float("inf")
            for _ in range(args.repeats):
                start = time.perf_counter()
                train(ds, splits, init, TrainConfig(epochs=args.epochs, fairness=FairnessConfig(w, w)))
                best = min(best, time.perf_counter() - start)
            times[name] = best
            print(f"{model:6s} {name:10s} {best:8.3f}")
        print(f"{model:6s} overhead   {times['eosp'] / times['baseline'] - 1:8.1%}")


if __name__ == "__main__":
    main()
