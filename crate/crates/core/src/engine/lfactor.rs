// expected L-factor tables and the normalized local integral
