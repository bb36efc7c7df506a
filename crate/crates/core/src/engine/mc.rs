// matrix-coefficient route
