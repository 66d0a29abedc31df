from .scheme import BACKEND, CkksContext, CkksEvaluator, ScaleOverflowError, ToyParams

__all__ = ["BACKEND", "CkksContext", "CkksEvaluator", "ScaleOverflowError", "ToyParams"]
