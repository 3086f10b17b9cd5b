"""Fixture package mirroring a few public manim names."""

from .animation.creation import *
from .mobject.geometry.arc import *
from .mobject.geometry.polygram import *
from .scene.scene import *
