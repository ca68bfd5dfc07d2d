"""Ship-in-broken-ice navigation: field generation, costmaps, closed-loop trials."""

from ._icenav import (
    IceField,
    build_costmap,
    default_experiment_spec_json,
    generate_field,
    ke_loss,
    load_field,
    run_batch,
    run_trial,
    save_field,
)

__all__ = [
    "IceField",
    "build_costmap",
    "default_experiment_spec_json",
    "generate_field",
    "ke_loss",
    "load_field",
    "run_batch",
    "run_trial",
    "save_field",
]
