/* The public header must compile as C and the library must link from C. */
#include <stdio.h>
#include <string.h>

#include <urbanfield/urbanfield.h>

int main(void) {
    uf_config* cfg = NULL;
    double s[4] = {0.1, 0.4, 0.35, 0.8};
    int y[4] = {0, 0, 1, 1};
    double auc = 0.0;
    if (uf_roc_auc(s, y, 4, &auc) != UF_OK || auc != 0.75) return 1;
    if (uf_config_parse("{\"seed\": []}", "/", &cfg) != UF_ERR_CONFIG) return 2;
    if (strlen(uf_last_error()) == 0) return 3;
    if (strcmp(uf_status_name(UF_ERR_IO), "io_error") != 0) return 4;
    printf("%s\n", uf_version());
    return 0;
}
