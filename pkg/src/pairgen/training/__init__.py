from .trainer import (
    TrainConfig,
    TrainReport,
    build_network,
    holdout_split,
    load_network,
    reconstruction_mae,
    run_freeze_selection,
    save_network,
    select_freeze,
    step_loss,
    train_onestep_ablation,
    train_step1,
    train_step2,
)
