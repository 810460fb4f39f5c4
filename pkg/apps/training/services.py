"""
Training loop, metrics stream and checkpoint resume
"""
import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.common.exceptions import CheckpointError, TrainingAborted
from apps.network.metrics import cross_entropy_loss, topk_accuracy
from apps.network.model import evaluate_clips, init_network, network_forward
from apps.network.services import NetworkStore
from apps.tensor.tensor import Tape, backward

from .optim import SgdOptimizer, lr_at

logger = logging.getLogger('motionbench')

METRIC_KEYS = ('epoch', 'split', 'loss', 'top1', 'top5', 'lr')


@dataclass
class TrainState:
    epoch: int
    params: object
    momentum: dict = field(default_factory=dict)
    best_top1: float = -1.0
    metrics: list = field(default_factory=list)


@contextmanager
def run_log(out_dir):
    """Mirror the motionbench logger into <out_dir>/run.log while training"""
    handler = logging.FileHandler(Path(out_dir) / 'run.log', encoding='utf-8')
    handler.setFormatter(logging.Formatter('{asctime} {levelname} {message}', style='{'))
    logger.addHandler(handler)
    try:
        yield handler
    finally:
        logger.removeHandler(handler)
        handler.close()


def epoch_rng(seed, epoch, *more):
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, *more]))


def batches(indices, batch_size):
    for start in range(0, len(indices), batch_size):
        yield indices[start:start + batch_size]


def metric_line(epoch, split, loss, top1, top5, lr):
    return {'epoch': epoch, 'split': split, 'loss': float(loss), 'top1': float(top1), 'top5': float(top5),
            'lr': float(lr)}


class Trainer:
    """Mini-batch SGD over the training split of an archive"""

    def __init__(self, archive, network_config, sgd_config, out_dir=None, store=None):
        self.archive = archive
        self.network_config = network_config
        self.config = sgd_config
        self.out_dir = Path(out_dir) if out_dir else None
        self.store = store or NetworkStore()
        self.train_indices = archive.split_indices('train')
        self.val_indices = archive.split_indices('val')
        self.top_k = min(5, network_config.num_classes)

    # State

    def initial_state(self):
        params = init_network(self.network_config, seed=self.config.seed)
        if self.config.init_checkpoint:
            self.load_pretrained(params, self.config.init_checkpoint)
        return TrainState(epoch=0, params=params)

    def load_pretrained(self, params, checkpoint):
        """
        Copy weights and running statistics of a trained network into fresh
        parameters. A classifier trained for another class count stays
        freshly initialized; every other entry must exist with the same shape.
        Momentum, epoch and metrics of the checkpoint are ignored.
        """
        _, pretrained, _, _ = self.store.load(checkpoint)
        source = pretrained.state()
        state = {}
        for name, array in params.state().items():
            if name not in source:
                raise CheckpointError(f"Checkpoint {checkpoint} has no entry '{name}'")
            if source[name].shape == array.shape:
                state[name] = source[name]
            elif name.startswith('classifier.'):
                logger.info(f"Keeping a fresh {name}: checkpoint has {source[name].shape}, network needs {array.shape}")
            else:
                raise CheckpointError(
                    f"Checkpoint {checkpoint} entry '{name}' has shape {source[name].shape}, expected {array.shape}"
                )
        params.load_state(state, strict=False)
        logger.info(f"Initialized {len(state)} entries from {checkpoint}")
        return params

    def resume_state(self, checkpoint):
        config, params, metadata, momentum = self.store.load(checkpoint)
        if config != self.network_config:
            raise CheckpointError(f"Checkpoint {checkpoint} was written for a different network configuration")
        return TrainState(epoch=int(metadata['epoch']) + 1, params=params, momentum=momentum,
                          best_top1=float(metadata.get('best_top1', -1.0)),
                          metrics=list(metadata.get('metrics', [])))

    # Loop

    def train_epoch(self, state, optimizer, epoch):
        lr = lr_at(epoch, self.config)
        order = epoch_rng(self.config.seed, epoch).permutation(self.train_indices)
        total_loss, correct1, correct_k, seen = 0.0, 0.0, 0.0, 0
        for batch_index, indices in enumerate(batches(order, self.config.batch_size)):
            clips = self.archive.normalized_batch(indices)
            labels = self.archive.labels[indices]
            with Tape() as tape:
                tape.watch(*optimizer.params.values())
                scores = network_forward(clips, self.network_config, state.params, training=True,
                                         dropout_rng=epoch_rng(self.config.seed, epoch, batch_index))
                loss = cross_entropy_loss(scores, labels)
            value = float(loss.data)
            if not np.isfinite(value):
                self.persist_abort(epoch, batch_index, indices, value)
                raise TrainingAborted("Non-finite training loss", epoch=epoch, batch=batch_index)
            grads = backward(loss, tape)
            optimizer.step({name: grads[tensor] for name, tensor in optimizer.params.items()}, lr)

            count = len(indices)
            seen += count
            total_loss += value * count
            correct1 += topk_accuracy(scores.data, labels, 1) * count
            correct_k += topk_accuracy(scores.data, labels, self.top_k) * count
        return metric_line(epoch, 'train', total_loss / seen, correct1 / seen, correct_k / seen, lr)

    def evaluate(self, params, epoch, lr):
        if len(self.val_indices) == 0:
            return None
        probs = evaluate_clips(self.archive.normalized_batch(self.val_indices), self.network_config, params,
                               views=self.config.eval_views, batch_size=self.config.batch_size)
        labels = self.archive.labels[self.val_indices]
        picked = probs[np.arange(len(labels)), labels].astype(np.float64)
        loss = float(-np.log(np.maximum(picked, 1e-12)).mean())
        return metric_line(epoch, 'val', loss, topk_accuracy(probs, labels, 1),
                           topk_accuracy(probs, labels, self.top_k), lr)

    def run(self, state=None, stop_after=None):
        """
        Train from ``state`` (fresh by default) until the configured epoch
        count, or for ``stop_after`` epochs. Returns the final TrainState.
        """
        state = state or self.initial_state()
        optimizer = SgdOptimizer(state.params, self.config, buffers=state.momentum)
        last_epoch = self.config.epochs if stop_after is None else min(self.config.epochs, state.epoch + stop_after)
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            self.rewrite_metrics(state.metrics)

        for epoch in range(state.epoch, last_epoch):
            lines = [self.train_epoch(state, optimizer, epoch)]
            val = self.evaluate(state.params, epoch, lines[0]['lr'])
            if val:
                lines.append(val)
            state.epoch = epoch + 1
            state.momentum = optimizer.state()
            state.metrics.extend(lines)
            for line in lines:
                logger.info(f"epoch {epoch} {line['split']}: loss {line['loss']:.4f} top1 {line['top1']:.3f} "
                            f"top{self.top_k} {line['top5']:.3f} lr {line['lr']:.2e}")
            top1 = lines[-1]['top1']
            improved = top1 > state.best_top1
            state.best_top1 = max(state.best_top1, top1)
            if self.out_dir:
                self.append_metrics(lines)
                self.save(state, epoch, 'last.imgc')
                if improved:
                    self.save(state, epoch, 'best.imgc')
        return state

    # Artifacts

    def save(self, state, epoch, name):
        metadata = {'epoch': epoch, 'best_top1': state.best_top1, 'metrics': state.metrics,
                    'seed': self.config.seed}
        return self.store.save(self.out_dir / name, self.network_config, state.params, metadata, state.momentum)

    def rewrite_metrics(self, metrics):
        with open(self.out_dir / 'metrics.jsonl', 'w', encoding='utf-8') as handle:
            for line in metrics:
                handle.write(json.dumps({key: line[key] for key in METRIC_KEYS}) + '\n')

    def append_metrics(self, lines):
        with open(self.out_dir / 'metrics.jsonl', 'a', encoding='utf-8') as handle:
            for line in lines:
                handle.write(json.dumps({key: line[key] for key in METRIC_KEYS}) + '\n')

    def persist_abort(self, epoch, batch_index, indices, value):
        if not self.out_dir:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        record = {'epoch': epoch, 'batch': batch_index, 'clip_indices': [int(i) for i in indices],
                  'loss': repr(value)}
        (self.out_dir / 'abort.json').write_text(json.dumps(record, indent=2), encoding='utf-8')
        logger.error(f"Training aborted at epoch {epoch}, batch {batch_index}; replay data in abort.json")
