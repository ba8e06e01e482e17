"""Built-in training recipes for the bundled benchmark datasets.

Each preset pins the architecture and readout temperature that reproduce the
reference accuracy for its dataset, together with the shared optimizer
settings (Adam, lr 0.01, batch 100, 200 epochs). Presets are the weakest
configuration layer: config-file values and command-line flags both override
them.
"""

from __future__ import annotations

# Per-preset fields: dataset to load, gate layers, layer width, readout
# temperature, class count. The temperatures are exact inverse values
# (1/0.075, 1/0.1, 1/0.03) rather than decimal approximations.
#
# Epoch counts are sized per dataset because one epoch spans wildly different
# step counts (monk1: 2 optimizer steps, mnist: 600). The tiny tabular sets
# need thousands of epochs to converge at batch 100; monk3 carries 5% label
# noise and degrades past ~200, so it keeps the short schedule.
PRESETS: dict[str, dict] = {
    "monk1": {
        "dataset": "monk1",
        "layers": 6,
        "width": 24,
        "tau": 1.0,
        "classes": 2,
        "epochs": 2000,
    },
    "monk2": {
        "dataset": "monk2",
        "layers": 6,
        "width": 12,
        "tau": 1.0,
        "classes": 2,
        "epochs": 8000,
    },
    "monk3": {
        "dataset": "monk3",
        "layers": 6,
        "width": 12,
        "tau": 1.0,
        "classes": 2,
        "epochs": 200,
    },
    "adult": {
        "dataset": "adult",
        "layers": 5,
        "width": 256,
        "tau": 1 / 0.075,
        "classes": 2,
        "epochs": 200,
    },
    "breast_cancer": {
        "dataset": "breast_cancer",
        "layers": 5,
        "width": 128,
        "tau": 1 / 0.1,
        "classes": 2,
        "epochs": 2000,
    },
    "mnist_small": {
        "dataset": "mnist",
        "layers": 6,
        "width": 8000,
        "tau": 1 / 0.1,
        "classes": 10,
        "epochs": 200,
    },
    "mnist": {
        "dataset": "mnist",
        "layers": 6,
        "width": 64000,
        "tau": 1 / 0.03,
        "classes": 10,
        "epochs": 200,
    },
}

# Optimizer settings shared by every preset.
_COMMON = {"lr": 0.01, "batch_size": 100, "beta": 0.0}


def preset_names() -> tuple[str, ...]:
    return tuple(PRESETS)


def get_preset(name: str) -> dict:
    """Return the full settings dict for ``name`` (hyphens and case ignored)."""
    key = name.lower().replace("-", "_")
    if key not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    return {**_COMMON, **PRESETS[key]}
