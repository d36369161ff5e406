/* Minimal consumer: builds the builtin grid, loads a matrix, ranks classes,
 * and replays one strategy.
 *
 *   cc smoke.c -I../include ../../../target/debug/libtunegain_capi.a \
 *      -lpthread -ldl -lm -o smoke
 *   ./smoke matrix.csv
 */
#include <stdio.h>
#include <stdlib.h>

#include "tunegain.h"

static void bail(const char *where) {
    fprintf(stderr, "%s: %s\n", where, tg_last_error());
    exit(1);
}

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s <matrix.csv>\n", argv[0]);
        return 2;
    }

    printf("tunegain %s\n", tg_version());

    TgMatrix *matrix = NULL;
    if (tg_matrix_load(argv[1], NULL, &matrix) != TG_STATUS_OK) bail("load");
    printf("classes: %zu\n", tg_matrix_n_classes(matrix));

    TgRanking *ranking = NULL;
    if (tg_rank_by_gain(matrix, &ranking) != TG_STATUS_OK) bail("rank");

    char best[128];
    if (tg_ranking_class(ranking, 0, best, sizeof best) != TG_STATUS_OK) bail("class");
    double gain = 0.0;
    if (tg_gain(matrix, best, NULL, NULL, &gain) != TG_STATUS_OK) bail("gain");
    printf("best candidate: %s (gain %.3f)\n", best, gain);

    TgResult *result = NULL;
    if (tg_run_strategy(matrix, "pri_rs", 0.2, 4, 42, ranking, &result) != TG_STATUS_OK)
        bail("tune");
    printf("extra branches: %.1f in %llu evals\n",
           tg_result_total_extra(result),
           (unsigned long long)tg_result_total_evals(result));

    tg_result_free(result);
    tg_ranking_free(ranking);
    tg_matrix_free(matrix);
    return 0;
}
