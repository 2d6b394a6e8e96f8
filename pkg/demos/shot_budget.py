"""Per-gradient circuit and shot counts for the four benchmark models at several sizes.

Run with ``python demos/shot_budget.py``.
"""
from commgrad.bench import ModelConfig, shot_table

for d in (4, 8, 16):
    print(f"d = {d}")
    for row in shot_table([ModelConfig(kind, d) for kind in "ABCD"]):
        print(f"  model {row['model']}: {row['parameters']:3d} parameters, {row['circuits']:5d} circuits, "
              f"{row['shots_per_gradient']:.2e} shots per gradient")
