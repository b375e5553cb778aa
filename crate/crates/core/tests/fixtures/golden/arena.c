typedef struct {
    size_t size;
    size_t free;
    char *alloc;
} arena_t;

void *arena_alloc(arena_t *arena, size_t n)
{
    if (arena->free < n)
        return NULL;
    void *p = arena->alloc + (arena->size - arena->free);
    arena->free -= n;
    return p;
}
