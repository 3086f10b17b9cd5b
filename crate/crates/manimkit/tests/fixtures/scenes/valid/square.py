from manim import *


class SquareToCircle(Scene):
    def construct(self):
        square = Square(side_length=2, color=GREEN)
        self.add(square)
        self.play(Transform(square, Circle(color=RED)), run_time=1)
        self.wait(0.4)
