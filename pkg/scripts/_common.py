import time

from kbpot.evaluation import evaluate_set
from kbpot.training import TrainingConfig, train


def train_eval(train_set, test_set, **config):
    start = time.perf_counter()
    params, report = train(train_set, TrainingConfig(**config))
    summary, _ = evaluate_set(test_set, params)
    return summary, report, time.perf_counter() - start
