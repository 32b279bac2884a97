"""Predictors guess the next letter; an evader tries to escape all of them.

Run: python3 demos/prediction_game.py
"""
from treeloc.prediction import Predictor, find_evader, predicted_set, predictor_to_trees, predicts

pi = Predictor.constant(3, 2, 3, (0, 1))
print(predicts(pi, (2, 0, 1), 0))
print(predicts(pi, (2, 2, 1), 0))

# the predicted set splits into k-trees, one per start letter
trees = predictor_to_trees(pi, 0)
print(len(predicted_set(pi, 0)), "points in", len(trees), "trees")

# one constant guess is easy to dodge
print("evader", find_evader([Predictor.constant(2, 1, 2, (0,))], 0))
# two overlapping pair guesses catch everything at depth 2
pair = [Predictor.constant(3, 2, 2, (0, 1)), Predictor.constant(3, 2, 2, (1, 2))]
print("evader", find_evader(pair, 0))
