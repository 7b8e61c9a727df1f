def predict(state, action)
    return state
