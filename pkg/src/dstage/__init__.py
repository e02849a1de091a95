"""dstage: automated experiment design and steerable social simulation.

Turns a natural-language research requirement into vetted executable
experiment scripts via a screenwriter/director pipeline, scores and
selects the best script, casts actor agents over a complete relationship
graph, and runs the script as a day-tick multi-agent simulation that a
human can steer live. All provider traffic flows through a record/replay
gateway, so every run is reproducible offline.
"""

__version__ = "0.1.0"
