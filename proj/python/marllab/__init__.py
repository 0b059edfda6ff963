try:
    from . import _marl as _core
except ImportError:  # built out-of-tree (cmake -DMARL_BUILD_PYTHON=ON) and put on sys.path
    import _marl as _core

ExperimentConfig = _core.ExperimentConfig
PursuitEnv = _core.PursuitEnv
RunReport = _core.RunReport
TrafficEnv = _core.TrafficEnv
attention_graph = _core.attention_graph
evaluate_checkpoint = _core.evaluate_checkpoint
export_attention = _core.export_attention
grad_check = _core.grad_check
load_config = _core.load_config
parse_config = _core.parse_config
run_experiment = _core.run_experiment

__all__ = [
    "ExperimentConfig",
    "PursuitEnv",
    "RunReport",
    "TrafficEnv",
    "attention_graph",
    "evaluate_checkpoint",
    "export_attention",
    "grad_check",
    "load_config",
    "parse_config",
    "run_experiment",
]
