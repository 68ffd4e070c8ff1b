"""Model families: the 1-D synthetic study and the grid segmentation pair."""
