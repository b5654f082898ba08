"""
_sheldon: scripted agents that always drive to one fixed landmark
"""

from numpy import asarray, clip, float64, zeros

from ._util import DimensionError
from ._world import (ACTION_DIM, ACTION_NEG_X, ACTION_NEG_Y, ACTION_POS_X,
                     ACTION_POS_Y, NUM_LANDMARKS, OBS_LANDMARKS, OBS_VELOCITY,
                     OBSERVATION_DIM)

DEFAULT_GAIN = 2.0
DEFAULT_BRAKE = 1.0


class SheldonPolicy(object):
    """Proportional-derivative point controller toward target_landmark.

    Desired acceleration is gain * (landmark - self) - brake * velocity;
    positive parts go to the matching directional action slots.
    """
    def __init__(self, target_landmark, gain=DEFAULT_GAIN,
                 brake=DEFAULT_BRAKE):
        if not 0 <= target_landmark < NUM_LANDMARKS:
            raise DimensionError("no such landmark: %r" % target_landmark)
        if gain <= 0 or brake <= 0:
            raise ValueError("controller gains must be positive")

        self.target_landmark = int(target_landmark)
        self.gain = float(gain)
        self.brake = float(brake)

    def __repr__(self):
        return "SheldonPolicy(%d, gain=%r, brake=%r)" % (self.target_landmark,
                                                          self.gain,
                                                          self.brake)

    def __call__(self, observation):
        return sheldon_act(self, observation)


def sheldon_act(policy, observation):
    observation = asarray(observation, dtype=float64)
    if observation.shape != (OBSERVATION_DIM,):
        raise DimensionError("observation must have %d values"
                             % OBSERVATION_DIM)

    landmarks = observation[OBS_LANDMARKS].reshape(NUM_LANDMARKS, 2)
    target = landmarks[policy.target_landmark]
    velocity = observation[OBS_VELOCITY]

    desired_x, desired_y = policy.gain * target - policy.brake * velocity

    res = zeros(ACTION_DIM)
    res[ACTION_POS_X] = max(desired_x, 0.0)
    res[ACTION_NEG_X] = max(-desired_x, 0.0)
    res[ACTION_POS_Y] = max(desired_y, 0.0)
    res[ACTION_NEG_Y] = max(-desired_y, 0.0)

    return clip(res, 0.0, 1.0)
