from .run_esdg_case import convergence_study, run_esdg_case
