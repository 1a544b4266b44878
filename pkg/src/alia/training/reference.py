"""Published reference numbers for report templates.

These constants exist so reports can print desk-scale results next to the
full-scale numbers from the original study; nothing in the pipeline asserts
against them, since reproducing them needs full datasets, diffusion backends,
and GPU training.
"""

# (mean, std) per column: user prompt / generated prompts / generated + filtering.
PROMPT_FILTERING_REFERENCE = {
    "iwildcam": {
        "metric": "macro-F1",
        "user-prompt": (68.87, 1.84),
        "alia-prompts": (70.65, 1.50),
        "alia-prompts+filtering": (72.34, 1.00),
    },
    "cub": {
        "metric": "class-balanced accuracy",
        "user-prompt": (71.02, 0.47),
        "alia-prompts": (71.25, 0.86),
        "alia-prompts+filtering": (72.70, 0.10),
    },
    "planes": {
        "metric": "class-balanced accuracy",
        "user-prompt": (62.453, 1.03),
        "alia-prompts": (67.03, 0.65),
        "alia-prompts+filtering": (68.84, 0.89),
    },
}

# Edit-method comparison on the camera-trap subset. The source reports both
# 72.34 (ablation table) and 73.34 (prose) for img2img with filtering; the
# two are kept verbatim rather than adjudicated.
EDIT_METHOD_REFERENCE = {
    "instruct-pix2pix": (67.11, 1.96),
    "img2img-table": (72.34, 1.00),
    "img2img-prose": (73.34, 1.0),
}

# Train / extra / val / test sizes and the resulting expansion percentage.
SPLIT_SIZE_REFERENCE = {
    "iwildcam": {"train": 6052, "extra": 2224, "val": 2826, "test": 8483, "added": 0.37},
    "cub": {"train": 4994, "extra": 1000, "val": 5794, "test": 5794, "added": 0.20},
    "planes": {"train": 409, "extra": 357, "val": 358, "test": 707, "added": 0.87},
}

# Winning training hyperparameters per dataset (lr, weight decay, epochs).
TRAINING_REFERENCE = {
    "iwildcam": (0.0001, 1e-4, 100),
    "cub": (0.001, 1e-4, 200),
    "planes": (0.001, 1e-4, 200),
}

# Chosen edit parameters (strength, guidance) per dataset and backend.
EDIT_PARAMS_REFERENCE = {
    "iwildcam": {"img2img": (0.4, 5.0), "instruct-pix2pix": (1.3, 7.5)},
    "cub": {"img2img": (0.6, 7.5)},
    "planes": {"img2img": (0.3, 5.0), "instruct-pix2pix": (1.3, 7.5)},
}

# Per-(class, background) counts for the contextual-bias aircraft splits.
PLANES_SPLIT_REFERENCE = {
    "train": {"Airbus": {"sky": 98, "grass": 0, "road": 70},
              "Boeing": {"sky": 129, "grass": 112, "road": 0}},
    "extra": {"Airbus": {"sky": 90, "grass": 21, "road": 21},
              "Boeing": {"sky": 136, "grass": 44, "road": 45}},
    "val": {"Airbus": {"sky": 90, "grass": 21, "road": 21},
            "Boeing": {"sky": 137, "grass": 45, "road": 44}},
    "test": {"Airbus": {"sky": 175, "grass": 51, "road": 51},
             "Boeing": {"sky": 222, "grass": 104, "road": 104}},
}

# Quantity ablation: gains peak when roughly 5-10% of the original training
# set size is added, declining beyond that.
QUANTITY_PEAK_RANGE = (0.05, 0.10)
