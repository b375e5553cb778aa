int max_element(const int *values, int count)
{
    int best = values[0];
    for (int i = 1; i < count; i++) {
        if (values[i] > best)
            best = values[i];
    }
    return best;
}
