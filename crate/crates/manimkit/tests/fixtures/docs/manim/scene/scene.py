"""The canvas that animations play on."""

__all__ = ["Scene"]


class Scene:
    """A container for mobjects and the animations applied to them.

    Examples
    --------
    .. manim:: SceneFixtureExample

        class SceneFixtureExample(Scene):
            def construct(self):
                self.wait()
    """

    def __init__(self, renderer=None, camera_class=None, **kwargs):
        self.renderer = renderer

    def construct(self):
        """Add content here; called once when the scene renders."""

    def play(self, *args, subcaptions=None, subcaption_duration=None, **kwargs):
        """Play animations in this scene.

        Parameters
        ----------
        args
            Animations, or mobject method calls built with ``.animate``.
        subcaptions
            Captions shown while the animations run.
        kwargs
            Applied to every animation, such as ``run_time``.

        Examples
        --------
        >>> self.play(Create(Circle()), run_time=2)
        """

    def wait(self, duration: float = 1.0, stop_condition=None):
        """Hold the current frame.

        Parameters
        ----------
        duration
            Seconds to wait.
        stop_condition
            Stop early once this returns true.
        """

    def _internal(self):
        """Not part of the public surface."""
