"""capkit: data-pipeline and evaluation toolkit for automatic audio captioning.

Pieces: ontology parsing and synthetic captions, balanced subset selection,
16 kHz resampling and log-mel features, waveform augmentations, dataset
mixture streaming, decoding strategies over a pluggable scorer, and caption
metrics (BLEU / CIDEr-D / METEOR-lite / SPIDEr).
"""

__version__ = "0.1.0"
