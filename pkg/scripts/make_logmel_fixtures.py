"""Regenerate the golden log-mel fixtures from the reference extractor.

Requires the `transformers` package (dev-only dependency). The dumps pin
the feature pipeline: any change that moves an output by more than 1e-4
fails the golden-vector tests.

Usage: python scripts/make_logmel_fixtures.py
"""

import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from signals import make_signals  # noqa: E402


def main() -> None:
    from transformers import WhisperFeatureExtractor

    import transformers

    extractor = WhisperFeatureExtractor()
    out = {}
    for name, signal in make_signals().items():
        features = extractor(
            signal, sampling_rate=16000, return_tensors="np"
        ).input_features[0]
        out[name] = features.astype(np.float32)
        print(f"{name}: {features.shape}")

    target = REPO / "tests" / "fixtures" / "logmel_golden.npz"
    target.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(target, **out)
    print(f"wrote {target} (transformers {transformers.__version__})")


if __name__ == "__main__":
    main()
