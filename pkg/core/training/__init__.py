"""
Training for AMOS-VPR
"""

from core.training.preprocess import preprocess, crop_offset, channel_mean
from core.training.optimizer import lr_at, sgd_step
from core.training.trainer import TrainLog, LogRow, BatchStream, train, evaluate_accuracy, load_images
from core.training.gradcheck import GradCheckResult, grad_check
