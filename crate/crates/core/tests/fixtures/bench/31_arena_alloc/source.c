#include <stddef.h>

struct arena {
    char *base;
    size_t used;
    size_t size;
};

void *arena_alloc(struct arena *arena, size_t bytes)
{
    size_t aligned = (bytes + 7) & ~(size_t)7;
    if (arena->size - arena->used < aligned)
        return NULL;
    void *ptr = arena->base + arena->used;
    arena->used += aligned;
    return ptr;
}
