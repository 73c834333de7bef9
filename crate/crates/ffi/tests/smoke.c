#include <math.h>
#include <stdio.h>
#include <string.h>

#include "perclab.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        PlStatus s_ = (call);                                              \
        if (s_ != PL_OK) {                                                 \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, pl_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    double ph = 0;
    CHECK(pl_ph_closed_form(1, 2, &ph));
    if (fabs(ph - 0.3664068597841079) > 1e-12) return 2;

    PlFamily *g = NULL;
    CHECK(pl_family_from_json("{\"name\":\"grandparent\",\"params\":{\"b\":2}}", &g));
    char *base = NULL;
    CHECK(pl_family_modular_base(g, &base));
    if (strcmp(base, "2") != 0) return 3;
    pl_string_free(base);

    PlWindow *w = NULL;
    CHECK(pl_window_ball(g, 3, &w));
    size_t nv = 0, ne = 0;
    CHECK(pl_window_size(w, &nv, &ne));

    PlConfig *c = NULL;
    CHECK(pl_config_sample(w, 1.0, 9, 0, &c));
    size_t open = 0, size = 0;
    CHECK(pl_config_open_count(c, &open));
    CHECK(pl_config_cluster_size(c, 0, &size));
    if (open != ne || size != nv) return 4;

    if (pl_slab_spectral_radius(1, 2, 0, &ph) != PL_ERR_DEGENERATE_SLAB) return 5;
    if (pl_last_error() == NULL) return 6;

    pl_config_free(c);
    pl_window_free(w);
    pl_family_free(g);
    printf("ok %s\n", pl_version());
    return 0;
}
