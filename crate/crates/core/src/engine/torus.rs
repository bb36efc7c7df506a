// inert torus-route cases
