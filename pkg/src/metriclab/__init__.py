"""metriclab: randomized separating partitions and low-distortion Euclidean
embeddings of finite weighted-l_p point sets.

Modules by topic:

* ``metric``     -- points, distances, nets, growth centers, doubling
* ``mazur``      -- power maps between l_p and l_2 and their radial pullback
* ``partitions`` -- partitions, ball carving, separation/padding estimators
* ``compose``    -- induction on scales, partition pullbacks
* ``reduce``     -- random projection plus nonexpansive extension
* ``embed``      -- single-scale and multiscale embedding constructions
* ``pipeline``   -- the end-to-end l_p separation sampler and experiments
* ``oracle``     -- exact tiny-instance separation constants via an LP
* ``cli``        -- reproducible experiment driver
* ``acceptance`` -- the criterion suite behind ``metriclab full-acceptance``
"""

__version__ = "0.1.0"
