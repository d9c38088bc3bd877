"""Desk-scale simulator of a generative-AI-integrated semantic communication network."""

from .channel import BitFrame, ChannelConfig, transmit
from .errors import CapacityError, ConfigurationError, DecodeError, EncodeError, KnowledgeMismatchError
from .knowledge import KnowledgeBase, UserProfile
from .scene import Image, Scene, SceneObject, Vocabulary, generate_corpus, generate_scene, render
from .workflow import NetworkState, SessionResult, prepare_network, run_session_a, run_session_b, run_session_c

__version__ = "0.1.0"
