struct node {
    int value;
    struct node *next;
};

int list_sum(const struct node *head)
{
    int total = 0;
    for (const struct node *it = head; it; it = it->next)
        total += it->value;
    return total;
}
