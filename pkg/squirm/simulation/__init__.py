"""Time marching, steady solves, parameter studies and output of squirmer simulations"""
